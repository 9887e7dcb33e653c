//! Fits a fixed-effects probit directly from a hand-built design and prints
//! robust standard errors and the in-sample AUC.

use industry_cohesion::econometrics::{fit_probit, Design};
use nalgebra::DMatrix;
use rand_core::Rng;
use rand_pcg::Pcg64;

fn main() -> industry_cohesion::Result<()> {
    let mut rng = Pcg64::new(42, 0);
    let mut uniform = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let n = 2000;
    let mut base = DMatrix::zeros(n, 2);
    let mut y = Vec::with_capacity(n);
    let mut region = Vec::with_capacity(n);
    for k in 0..n {
        let r = k % 8;
        let z = 2.0 * uniform() - 1.0;
        let latent = -0.4 + 0.9 * z + 0.1 * r as f64;
        // inverse-CDF draw of a standard normal shock via the library quantile
        let shock =
            industry_cohesion::econometrics::normal::quantile(uniform().clamp(1e-12, 1.0 - 1e-12));
        base[(k, 0)] = 1.0;
        base[(k, 1)] = z;
        y.push(if latent + shock > 0.0 { 1.0 } else { 0.0 });
        region.push(format!("R{r}"));
    }
    let design =
        Design::new(vec!["const".into(), "z".into()], base, y)?.with_factor("region", &region)?;
    let fit = fit_probit(&design)?;
    println!(
        "n = {}, converged = {}, iterations = {}",
        fit.n_obs, fit.converged, fit.iterations
    );
    for t in &fit.terms {
        println!(
            "{:<12} {:>8.4} ({:.4}) {}",
            t.name,
            t.estimate,
            t.robust_se,
            t.stars()
        );
    }
    println!("AUC {:.3}", fit.auc);
    Ok(())
}
