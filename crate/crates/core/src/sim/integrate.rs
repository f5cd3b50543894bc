//! Classical fixed-step Runge-Kutta integration.

use crate::{Error, Result};

/// One RK4 step of `dz/dt = f(t, z)`. Any non-finite stage value aborts the
/// step with [`Error::Blowup`] naming the offending component by index.
pub fn rk4_step<const N: usize, F>(z: &[f64; N], t: f64, dt: f64, mut f: F) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let check = |v: &[f64; N], at: f64| -> Result<()> {
        match v.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(Error::Blowup {
                t: at,
                component: i.to_string(),
            }),
            None => Ok(()),
        }
    };
    let h2 = 0.5 * dt;
    let k1 = f(t, z)?;
    check(&k1, t)?;
    let z2 = std::array::from_fn(|i| z[i] + h2 * k1[i]);
    let k2 = f(t + h2, &z2)?;
    check(&k2, t + h2)?;
    let z3 = std::array::from_fn(|i| z[i] + h2 * k2[i]);
    let k3 = f(t + h2, &z3)?;
    check(&k3, t + h2)?;
    let z4 = std::array::from_fn(|i| z[i] + dt * k3[i]);
    let k4 = f(t + dt, &z4)?;
    check(&k4, t + dt)?;
    let out = std::array::from_fn(|i| z[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    check(&out, t + dt)?;
    Ok(out)
}

/// Replace an index-named blow-up component with its state name.
pub(crate) fn name_component(e: Error, names: &[&str]) -> Error {
    match e {
        Error::Blowup { t, component } => {
            let name = component
                .parse::<usize>()
                .ok()
                .and_then(|i| names.get(i))
                .map(|s| s.to_string())
                .unwrap_or(component);
            Error::Blowup { t, component: name }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_field_keeps_state() {
        let z = [1.0, -2.0, 3.5];
        let out = rk4_step(&z, 0.0, 0.1, |_, _| Ok([0.0; 3])).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn decay_matches_rk4_polynomial() {
        let out = rk4_step(&[1.0], 0.0, 0.1, |_, z| Ok([-z[0]])).unwrap();
        let h: f64 = 0.1;
        let poly = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert_relative_eq!(out[0], poly, max_relative = 1e-15);
        assert_relative_eq!(out[0], 0.9048375, max_relative = 1e-7);
    }

    #[test]
    fn non_finite_stage_is_reported() {
        let e = rk4_step(&[1.0, 0.0], 2.0, 0.1, |_, z| Ok([0.0, 1.0 / z[1]])).unwrap_err();
        match name_component(e, &["a", "b"]) {
            Error::Blowup { t, component } => {
                assert_eq!(t, 2.0);
                assert_eq!(component, "b");
            }
            other => panic!("{other:?}"),
        }
    }
}
