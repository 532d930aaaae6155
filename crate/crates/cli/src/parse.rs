use cea_core::experiments::ProblemSpec;
use cea_core::grid::GridShape;

use crate::args::{BetaArgs, ProblemArgs};
use crate::error::{CliError, CliResult};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn grid(text: &str) -> CliResult<GridShape> {
    let (w, h) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("grid must look like WxH, got {text:?}")))?;
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("bad grid dimension {s:?}")))
    };
    Ok(GridShape::new(num(w)?, num(h)?)?)
}

/// Snaps grid points to 12 decimals so that 0.1·3 prints as 0.3.
fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Inclusive `start:stop:step` grid.
pub fn beta_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad grid {text:?}")))?;
    let [start, stop, step] = nums[..] else {
        return Err(usage(format!("grid must be start:stop:step, got {text:?}")));
    };
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(usage(format!("grid {text:?} needs step > 0 and stop ≥ start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| snap(start + i as f64 * step)).collect())
}

pub fn range(text: &str) -> CliResult<(f64, f64)> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("range must be start:stop, got {text:?}")))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("bad number {s:?}")));
    Ok((num(a)?, num(b)?))
}

pub fn betas(args: &BetaArgs) -> CliResult<Vec<f64>> {
    let mut out = args.beta.clone();
    if let Some(g) = &args.beta_grid {
        out.extend(beta_grid(g)?);
    }
    if out.is_empty() {
        return Err(usage("give --beta or --beta-grid"));
    }
    if let Some(b) = out.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(usage(format!("beta {b} outside [0, 1]")));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

pub fn problem(args: &ProblemArgs) -> CliResult<ProblemSpec> {
    if let Some(path) = &args.qap {
        return Ok(ProblemSpec::Qap { path: path.clone() });
    }
    if let Some(path) = &args.nk_file {
        return Ok(ProblemSpec::NkFile { path: path.clone() });
    }
    let text = args.nk.as_deref().ok_or_else(|| usage("give --qap, --nk or --nk-file"))?;
    let f: Vec<&str> = text.split(',').map(str::trim).collect();
    let [n, k, kind, seed] = f[..] else {
        return Err(usage(format!("--nk expects n,k,kind,seed, got {text:?}")));
    };
    let bad = |what: &str| usage(format!("--nk: bad {what} in {text:?}"));
    Ok(ProblemSpec::Nk {
        n: n.parse().map_err(|_| bad("n"))?,
        k: k.parse().map_err(|_| bad("k"))?,
        kind: kind.parse().map_err(|_| bad("kind"))?,
        seed: seed.parse().map_err(|_| bad("seed"))?,
    })
}
