//! Adaptive Simpson quadrature for scalar and grid-valued integrands.

use crate::error::{Error, Result};

const MIN_DEPTH: u32 = 3;
const MAX_DEPTH: u32 = 30;

fn simpson(h: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// `int_a^b f` to relative tolerance `tol`, measured against `int |f|`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if b == a {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fm = f(0.5 * (a + b))?;
    let fb = f(b)?;
    let scale = coarse_abs_integral(&f, a, b)?;
    let whole = simpson(b - a, fa, fm, fb);
    let tol_abs = tol * scale;
    let (value, err) = recurse(&f, a, b, fa, fm, fb, whole, tol_abs, 0)?;
    if err > tol_abs {
        return Err(Error::Quadrature {
            achieved: if scale > 0.0 { err / scale } else { err },
            requested: tol,
        });
    }
    Ok(value)
}

fn coarse_abs_integral<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<f64> {
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut acc = 0.0;
    for i in 0..PANELS {
        let x0 = a + i as f64 * h;
        acc += simpson(h, f(x0)?.abs(), f(x0 + 0.5 * h)?.abs(), f(x0 + h)?.abs());
    }
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<(f64, f64)> {
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m))?;
    let frm = f(0.5 * (m + b))?;
    let left = simpson(m - a, fa, flm, fm);
    let right = simpson(b - m, fm, frm, fb);
    let diff = left + right - whole;
    let err = diff.abs() / 15.0;
    if (depth >= MIN_DEPTH && err <= tol) || depth >= MAX_DEPTH {
        return Ok((left + right + diff / 15.0, err));
    }
    let (lv, le) = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let (rv, re) = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok((lv + rv, le + re))
}

/// Grid-valued adaptive Simpson: `int_a^b F(tau) dtau` where `F` returns a
/// vector and `norm` measures errors. Halves are evaluated in parallel; the
/// combination order is fixed, so results do not depend on scheduling.
pub fn adaptive_simpson_vec<F, N>(f: &F, norm: &N, a: f64, b: f64, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
    N: Fn(&[f64]) -> f64 + Sync,
{
    let fa = f(a)?;
    if b == a {
        return Ok(vec![0.0; fa.len()]);
    }
    let fm = f(0.5 * (a + b))?;
    let fb = f(b)?;
    let whole = simpson_vec(b - a, &fa, &fm, &fb);

    // Scale: integral of the integrand norm from the same three samples.
    let scale = simpson(b - a, norm(&fa), norm(&fm), norm(&fb)).max(norm(&whole));
    let tol_abs = tol * scale;
    let (value, err) = recurse_vec(f, norm, a, b, &fa, &fm, &fb, whole, tol_abs, 0)?;
    if err > tol_abs {
        return Err(Error::Quadrature {
            achieved: if scale > 0.0 { err / scale } else { err },
            requested: tol,
        });
    }
    Ok(value)
}

fn simpson_vec(h: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    fa.iter()
        .zip(fm)
        .zip(fb)
        .map(|((a, m), b)| h / 6.0 * (a + 4.0 * m + b))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn recurse_vec<F, N>(
    f: &F,
    norm: &N,
    a: f64,
    b: f64,
    fa: &[f64],
    fm: &[f64],
    fb: &[f64],
    whole: Vec<f64>,
    tol: f64,
    depth: u32,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
    N: Fn(&[f64]) -> f64 + Sync,
{
    let m = 0.5 * (a + b);
    let (flm, frm) = rayon::join(|| f(0.5 * (a + m)), || f(0.5 * (m + b)));
    let (flm, frm) = (flm?, frm?);
    let left = simpson_vec(m - a, fa, &flm, fm);
    let right = simpson_vec(b - m, fm, &frm, fb);
    let diff: Vec<f64> = left
        .iter()
        .zip(&right)
        .zip(&whole)
        .map(|((l, r), w)| l + r - w)
        .collect();
    let err = norm(&diff) / 15.0;
    if (depth >= MIN_DEPTH && err <= tol) || depth >= MAX_DEPTH {
        let value = left
            .iter()
            .zip(&right)
            .zip(&diff)
            .map(|((l, r), d)| l + r + d / 15.0)
            .collect();
        return Ok((value, err));
    }
    let (lres, rres) = rayon::join(
        || recurse_vec(f, norm, a, m, fa, &flm, fm, left, 0.5 * tol, depth + 1),
        || recurse_vec(f, norm, m, b, fm, &frm, fb, right, 0.5 * tol, depth + 1),
    );
    let (lv, le) = lres?;
    let (rv, re) = rres?;
    Ok((lv.iter().zip(&rv).map(|(l, r)| l + r).collect(), le + re))
}
