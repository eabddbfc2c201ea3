use std::path::Path;

use serde_json::json;

use krr_deriv::linalg::Matrix;
use krr_deriv::tuning::{default_lambda_grid, profile_sigma2, tune_mmle_gram, tune_nu, DEFAULT_NU_CANDIDATES};
use krr_deriv::{FittedKrr, KernelSpec, ModelDocument, MultiIndex, TuneResult};

use crate::args::{FitArgs, PredictArgs, TuneArgs, TuningArgs};
use crate::error::{CliError, CliResult};
use crate::files::{num, parse_numeric_csv, Artifacts, Table};
use crate::Outcome;

struct Data {
    design: Matrix<f64>,
    y: Vec<f64>,
}

fn load_data(art: &mut Artifacts, path: &Path) -> CliResult<Data> {
    let name = path.display().to_string();
    let table = parse_numeric_csv(&art.read_string(path)?, &name)?;
    if table.headers.len() < 2 || table.headers.last().map(String::as_str) != Some("y") {
        return Err(CliError::Input(format!("{name}: header must be x1,...,xd,y")));
    }
    let d = table.headers.len() - 1;
    let y = table.rows.iter().map(|r| r[d]).collect();
    let rows: Vec<Vec<f64>> = table.rows.into_iter().map(|mut r| {
        r.truncate(d);
        r
    }).collect();
    Ok(Data { design: Matrix::from_rows(&rows)?, y })
}

fn lambda_grid(t: &TuningArgs) -> CliResult<Vec<f64>> {
    match &t.lambda_grid {
        Some(g) => Ok(g.values()?),
        None => Ok(default_lambda_grid()),
    }
}

fn is_untuned_matern(kernel: &str) -> bool {
    kernel.trim() == "matern"
}

fn parse_kernel(kernel: &str) -> CliResult<KernelSpec<f64>> {
    if is_untuned_matern(kernel) {
        return Err(CliError::Input("kernel `matern` needs a smoothness (`matern:<nu>`) unless tuned".into()));
    }
    Ok(kernel.parse()?)
}

/// Marginal likelihood for `(lambda, sigma^2)`; a bare `matern` also selects
/// the smoothness by leave-one-out.
fn tune_model(kernel: &str, data: &Data, t: &TuningArgs) -> CliResult<(KernelSpec<f64>, TuneResult<f64>)> {
    let grid = lambda_grid(t)?;
    if is_untuned_matern(kernel) {
        let nus = t.nu_candidates.clone().unwrap_or_else(|| DEFAULT_NU_CANDIDATES.to_vec());
        let tune = tune_nu(&data.design, &data.y, &nus, &grid)?;
        let nu = tune.nu.expect("smoothness tuned");
        return Ok((KernelSpec::matern(nu)?, tune));
    }
    let spec = parse_kernel(kernel)?;
    let gram = spec.gram(&data.design)?;
    let tune = tune_mmle_gram(&gram, &data.y, &grid)?;
    Ok((spec, tune))
}

pub fn fit(args: &FitArgs, art: &mut Artifacts) -> CliResult<Outcome> {
    let data = load_data(art, &args.data)?;
    let (model, tune) = if args.tune {
        let (spec, tune) = tune_model(&args.kernel, &data, &args.tuning)?;
        let sigma2 = args.sigma2.unwrap_or(tune.sigma2);
        (FittedKrr::fit(spec, data.design, &data.y, tune.lambda, Some(sigma2))?, Some(tune))
    } else {
        let spec = parse_kernel(&args.kernel)?;
        let lambda = args.lambda.expect("clap requires --lambda without --tune");
        let gram = spec.gram(&data.design)?;
        let sigma2 = match args.sigma2 {
            Some(s) => s,
            None => profile_sigma2(&gram, &data.y, lambda)?,
        };
        (FittedKrr::fit_with_gram(spec, data.design, &gram, &data.y, lambda, Some(sigma2))?, None)
    };
    let doc = model.to_document(tune);
    art.write_json(&args.out, &doc)?;
    Ok(Outcome::new(json!({
        "data": args.data.display().to_string(),
        "kernel": doc.kernel,
        "lambda": doc.lambda,
        "sigma2": doc.sigma2,
        "tuned": args.tune,
        "lambda_grid": args.tuning.lambda_grid,
        "nu_candidates": args.tuning.nu_candidates,
        "out": args.out.display().to_string(),
    })))
}

pub fn tune(args: &TuneArgs, art: &mut Artifacts) -> CliResult<Outcome> {
    let data = load_data(art, &args.data)?;
    let (spec, tune) = tune_model(&args.kernel, &data, &args.tuning)?;
    let doc = json!({ "kernel": spec.to_string(), "result": tune });
    art.write_json(&args.out, &doc)?;
    Ok(Outcome::new(json!({
        "data": args.data.display().to_string(),
        "kernel": args.kernel,
        "lambda_grid": args.tuning.lambda_grid,
        "nu_candidates": args.tuning.nu_candidates,
        "out": args.out.display().to_string(),
    })))
}

fn parse_order(token: &str, d: usize) -> CliResult<MultiIndex> {
    let token = token.trim();
    if token.contains(':') {
        let beta: MultiIndex = token.parse()?;
        if beta.dim() != d {
            return Err(CliError::Input(format!("order `{token}` has {} entries, model dimension is {d}", beta.dim())));
        }
        return Ok(beta);
    }
    let k: usize = token.parse().map_err(|_| CliError::Input(format!("bad derivative order `{token}`")))?;
    if d != 1 {
        return Err(CliError::Input(format!("order `{token}` is ambiguous in {d} dimensions; use a multi-index")));
    }
    Ok(MultiIndex::scalar(k))
}

pub fn predict(args: &PredictArgs, art: &mut Artifacts) -> CliResult<Outcome> {
    let text = art.read_string(&args.model)?;
    let doc: ModelDocument<f64> = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.model.display())))?;
    let model = FittedKrr::from_document(&doc)?;
    let d = model.dim();

    let qname = args.query.display().to_string();
    let query = parse_numeric_csv(&art.read_string(&args.query)?, &qname)?;
    let mut headers = query.headers.clone();
    let mut rows = query.rows;
    if headers.len() == d + 1 && headers.last().map(String::as_str) == Some("y") {
        headers.pop();
        for r in &mut rows {
            r.pop();
        }
    }
    if headers.len() != d {
        return Err(CliError::Input(format!("{qname}: {} columns, model dimension is {d}", headers.len())));
    }
    let xs = Matrix::from_rows(&rows)?;

    let orders = args.k.iter().map(|t| parse_order(t, d)).collect::<CliResult<Vec<_>>>()?;
    let zero = MultiIndex::zeros(d);
    for beta in &orders {
        let ok = model.kernel().offers(beta, &zero) && (!args.variance || model.kernel().offers(beta, beta));
        if !ok {
            return Err(CliError::Capability(format!(
                "kernel `{}` does not offer derivative order {beta}{}",
                model.kernel(),
                if args.variance { " with variance" } else { "" }
            )));
        }
    }
    let mut columns = Vec::new();
    let mut header = headers.clone();
    for beta in &orders {
        header.push(format!("deriv_{beta}"));
        columns.push(model.predict_deriv(beta, &xs)?);
        if args.variance {
            header.push(format!("var_{beta}"));
            columns.push(model.predict_variance(beta, &xs)?);
        }
    }
    let mut table = Table::new(&header)?;
    for (i, r) in rows.iter().enumerate() {
        table.row(r.iter().map(|&v| num(v)).chain(columns.iter().map(|c| num(c[i]))))?;
    }
    art.write_table(&args.out, table)?;
    Ok(Outcome::new(json!({
        "model": args.model.display().to_string(),
        "query": qname,
        "orders": orders.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
        "variance": args.variance,
        "out": args.out.display().to_string(),
    })))
}

