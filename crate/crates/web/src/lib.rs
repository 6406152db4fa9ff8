//! Browser bindings: the kernel-difference profile, the one-dimensional
//! score curves and `δ_ξ` surfaces, computed in wasm and drawn by
//! `www/index.html`.

use gpdisc::figures;
use gpdisc::kernels::{KernelFamily, KernelSpec, ModelPair};
use gpdisc::measures::{simplex_measure, PsiFunction};
use wasm_bindgen::prelude::*;

/// Named curves over a common abscissa, plus one marked abscissa.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Series {
    x: Vec<f64>,
    ys: Vec<Vec<f64>>,
    labels: Vec<String>,
    marker: f64,
}

#[wasm_bindgen]
impl Series {
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    pub fn count(&self) -> usize {
        self.ys.len()
    }

    pub fn y(&self, i: usize) -> Vec<f64> {
        self.ys[i].clone()
    }

    pub fn label(&self, i: usize) -> String {
        self.labels[i].clone()
    }

    pub fn marker(&self) -> f64 {
        self.marker
    }
}

/// Row-major `m × m` values over a square, with the simplex that defines it.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Surface {
    m: usize,
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    vertices: Vec<f64>,
    delta: f64,
}

#[wasm_bindgen]
impl Surface {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Flattened `(x1, x2)` pairs of the simplex vertices.
    pub fn vertices(&self) -> Vec<f64> {
        self.vertices.clone()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

fn kernel(family: &str, inverse_length: f64) -> Result<KernelSpec, String> {
    let f: KernelFamily = family.parse().map_err(|e: gpdisc::Error| e.to_string())?;
    let mut k = KernelSpec::matern32(1.0);
    k.family = f;
    k = k.with_inverse_length(inverse_length);
    k.validate().map_err(|e| e.to_string())?;
    Ok(k)
}

/// `ψ(t)` on `[0, t_max]`, marked at `Δ`.
pub fn psi_series(family0: &str, theta0: f64, family1: &str, theta1: f64, t_max: f64, points: usize) -> Result<Series, String> {
    let pair = ModelPair::new(kernel(family0, theta0)?, kernel(family1, theta1)?);
    let (t, peak) = figures::psi_curve(&pair, t_max, points).map_err(|e| e.to_string())?;
    Ok(Series {
        x: t.column("t").expect("column exists"),
        ys: vec![t.column("psi").expect("column exists")],
        labels: vec!["psi".into()],
        marker: peak.delta,
    })
}

/// `φ_A`, `φ_B`, `φ_KL` between the first two points of the 11-point design;
/// `example` 1 uses `e^{−αr}/α`, 2 uses `e^{−αr}`. The marker is the midpoint.
pub fn example_series(example: u32, a0: f64, a1: f64, points: usize) -> Result<Series, String> {
    let scaled = match example {
        1 => true,
        2 => false,
        _ => return Err(format!("unknown example {example}; expected 1 or 2")),
    };
    let t = figures::exponential_example(scaled, a0, a1, points).map_err(|e| e.to_string())?;
    let x = t.column("x").expect("column exists");
    let marker = 0.5 * (x[0] + x[x.len() - 1]);
    let labels = ["phi_a", "phi_b", "phi_kl"];
    Ok(Series {
        x,
        ys: labels.iter().map(|l| t.column(l).expect("column exists")).collect(),
        labels: labels.map(String::from).to_vec(),
        marker,
    })
}

/// `δ_ξ` for the equal-weight triangle of side `Δ`, on `[−Δ, 2Δ]²`.
pub fn delta_surface(family0: &str, theta0: f64, family1: &str, theta1: f64, p: f64, m: usize) -> Result<Surface, String> {
    let pair = ModelPair::new(kernel(family0, theta0)?, kernel(family1, theta1)?);
    let psi = PsiFunction::from_kernels(&pair, true).map_err(|e| e.to_string())?;
    let delta = psi.delta().expect("kernel profile has a peak");
    let xi = simplex_measure(2, delta, &[0.0, 0.0], None).map_err(|e| e.to_string())?;
    let (lo, hi) = (-delta, 2.0 * delta);
    let t = figures::delta_surface(&psi, &xi, p, [lo; 2], [hi; 2], m).map_err(|e| e.to_string())?;
    Ok(Surface {
        m,
        lo,
        hi,
        values: t.column("delta_xi").expect("column exists"),
        vertices: xi.support().coords().to_vec(),
        delta,
    })
}

#[wasm_bindgen(js_name = psiSeries)]
pub fn psi_series_js(family0: &str, theta0: f64, family1: &str, theta1: f64, t_max: f64, points: usize) -> Result<Series, JsError> {
    psi_series(family0, theta0, family1, theta1, t_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = exampleSeries)]
pub fn example_series_js(example: u32, a0: f64, a1: f64, points: usize) -> Result<Series, JsError> {
    example_series(example, a0, a1, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = deltaSurface)]
pub fn delta_surface_js(family0: &str, theta0: f64, family1: &str, theta1: f64, p: f64, m: usize) -> Result<Surface, JsError> {
    delta_surface(family0, theta0, family1, theta1, p, m).map_err(|e| JsError::new(&e))
}
