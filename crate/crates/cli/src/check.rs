//! Self-test of the special functions: identities, special values and
//! comparisons against direct quadrature of the defining integrals.

use std::f64::consts::FRAC_PI_2;

use serde_json::json;
use swingdyn::elliptic::{self, Modulus};
use swingdyn::quadrature;
use swingdyn::Result;

pub struct Check {
    pub name: &'static str,
    pub max_error: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tol
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "check": self.name,
            "max_error": self.max_error,
            "tol": self.tol,
            "pass": self.passed(),
        })
    }
}

fn moduli() -> Vec<f64> {
    (0..=20).map(|i| 0.999 * i as f64 / 20.0).collect()
}

fn incomplete_f(phi: f64, k: f64) -> f64 {
    quadrature::integrate(|t| 1.0 / (1.0 - (k * t.sin()).powi(2)).sqrt(), 0.0, phi)
}

pub fn run(tol: f64) -> Result<Vec<Check>> {
    let ks = moduli();
    let mut special: f64 = 0.0;
    special = special.max((elliptic::ellip_k(0.0)? - FRAC_PI_2).abs());
    special = special.max((elliptic::ellip_e(0.0)? - FRAC_PI_2).abs());
    special = special.max((elliptic::ellip_e(1.0)? - 1.0).abs());

    let (mut k_quad, mut e_quad, mut legendre, mut pyth, mut dn_id, mut quarter, mut am_inv) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &k in &ks {
        let m = Modulus::new(k)?;
        let (big_k, big_e) = (m.ellip_k(), m.ellip_e());
        let k_ref = quadrature::integrate(
            |t| 1.0 / (1.0 - (k * t.sin()).powi(2)).sqrt(),
            0.0,
            FRAC_PI_2,
        );
        let e_ref = quadrature::integrate(|t| (1.0 - (k * t.sin()).powi(2)).sqrt(), 0.0, FRAC_PI_2);
        k_quad = k_quad.max((big_k - k_ref).abs() / k_ref);
        e_quad = e_quad.max((big_e - e_ref).abs() / e_ref);
        if k > 0.0 {
            let c = m.complement();
            let lhs = big_e * c.ellip_k() + c.ellip_e() * big_k - big_k * c.ellip_k();
            legendre = legendre.max((lhs - FRAC_PI_2).abs());
        }
        quarter = quarter.max((m.sn_cn_dn(big_k).sn - 1.0).abs());
        for j in 0..=16 {
            let u = -2.0 * big_k + 4.0 * big_k * j as f64 / 16.0 + 0.1;
            let f = m.sn_cn_dn(u);
            pyth = pyth.max((f.sn * f.sn + f.cn * f.cn - 1.0).abs());
            dn_id = dn_id.max((f.dn * f.dn + k * k * f.sn * f.sn - 1.0).abs());
            let phi = 1.4 * j as f64 / 16.0;
            am_inv = am_inv.max((m.am(incomplete_f(phi, k)) - phi).abs());
        }
    }
    // Quadrature references are good to about 1e-14; allow a little slack.
    let oracle_tol = tol.max(1e-13);
    Ok(vec![
        Check {
            name: "special values K(0), E(0), E(1)",
            max_error: special,
            tol,
        },
        Check {
            name: "K(k) vs defining integral (rel)",
            max_error: k_quad,
            tol: oracle_tol,
        },
        Check {
            name: "E(k) vs defining integral (rel)",
            max_error: e_quad,
            tol: oracle_tol,
        },
        Check {
            name: "Legendre relation",
            max_error: legendre,
            tol,
        },
        Check {
            name: "sn^2 + cn^2 = 1",
            max_error: pyth,
            tol,
        },
        Check {
            name: "dn^2 + k^2 sn^2 = 1",
            max_error: dn_id,
            tol,
        },
        Check {
            name: "sn(K) = 1",
            max_error: quarter,
            tol,
        },
        Check {
            name: "am inverts F(phi, k)",
            max_error: am_inv,
            tol: oracle_tol,
        },
    ])
}
