//! One-dimensional A-WENO flux differences along a periodic line.
//!
//! States are stored with the line-normal momentum in slot 1 and the
//! tangential momentum in slot 2, so one kernel serves both directions.

use crate::gas::pressure_raw;

pub(crate) type State = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Variables {
    Characteristic,
    Primitive,
}

/// Per-line scratch buffers.
#[derive(Default)]
pub(crate) struct Workspace {
    flux: Vec<State>,
    h: Vec<State>,
}

fn physical_flux(u: &State, gamma: f64) -> State {
    let un = u[1] / u[0];
    let p = pressure_raw(u, gamma);
    [u[1], u[1] * un + p, u[2] * un, un * (u[3] + p)]
}

fn is_physical(u: &State, gamma: f64) -> bool {
    u[0] > 0.0 && pressure_raw(u, gamma) > 0.0 && u.iter().all(|v| v.is_finite())
}

const D: [f64; 3] = [1.0 / 16.0, 10.0 / 16.0, 5.0 / 16.0];

/// WENO-Z interpolation of the point value at `x_{j+1/2}` from `f[j-2..=j+2]`.
#[inline]
pub(crate) fn weno_z(f: [f64; 5], eps: f64) -> f64 {
    let [a, b, c, d, e] = f;
    let q0 = 0.375 * a - 1.25 * b + 1.875 * c;
    let q1 = -0.125 * b + 0.75 * c + 0.375 * d;
    let q2 = 0.375 * c + 0.75 * d - 0.125 * e;
    let b0 = 13.0 / 12.0 * (a - 2.0 * b + c).powi(2) + 0.25 * (a - 4.0 * b + 3.0 * c).powi(2);
    let b1 = 13.0 / 12.0 * (b - 2.0 * c + d).powi(2) + 0.25 * (b - d).powi(2);
    let b2 = 13.0 / 12.0 * (c - 2.0 * d + e).powi(2) + 0.25 * (3.0 * c - 4.0 * d + e).powi(2);
    let tau = (b0 - b2).abs();
    let a0 = D[0] * (1.0 + (tau / (b0 + eps)).powi(2));
    let a1 = D[1] * (1.0 + (tau / (b1 + eps)).powi(2));
    let a2 = D[2] * (1.0 + (tau / (b2 + eps)).powi(2));
    (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)
}

/// Right and left eigenvector matrices of the normal flux Jacobian at the Roe
/// average of `ul` and `ur`. Rows of `l` are left eigenvectors; columns of `r`
/// are right eigenvectors, ordered `u - c, shear, entropy, u + c`.
pub(crate) fn roe_eigenvectors(
    ul: &State,
    ur: &State,
    gamma: f64,
) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let sl = ul[0].sqrt();
    let sr = ur[0].sqrt();
    let hl = (ul[3] + pressure_raw(ul, gamma)) / ul[0];
    let hr = (ur[3] + pressure_raw(ur, gamma)) / ur[0];
    let w = 1.0 / (sl + sr);
    let u = (ul[1] / sl + ur[1] / sr) * w;
    let v = (ul[2] / sl + ur[2] / sr) * w;
    let h = (sl * hl + sr * hr) * w;
    let q2 = u * u + v * v;
    let c = ((gamma - 1.0) * (h - 0.5 * q2)).max(1e-300).sqrt();
    let b1 = (gamma - 1.0) / (c * c);
    let b2 = 0.5 * b1 * q2;
    let r = [
        [1.0, 0.0, 1.0, 1.0],
        [u - c, 0.0, u, u + c],
        [v, 1.0, v, v],
        [h - u * c, v, 0.5 * q2, h + u * c],
    ];
    let l = [
        [
            0.5 * (b2 + u / c),
            -0.5 * (b1 * u + 1.0 / c),
            -0.5 * b1 * v,
            0.5 * b1,
        ],
        [-v, 0.0, 1.0, 0.0],
        [1.0 - b2, b1 * u, b1 * v, -b1],
        [
            0.5 * (b2 - u / c),
            -0.5 * (b1 * u - 1.0 / c),
            -0.5 * b1 * v,
            0.5 * b1,
        ],
    ];
    (l, r)
}

#[inline]
fn mat_vec(m: &[[f64; 4]; 4], x: &State) -> State {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2] + m[i][3] * x[3];
    }
    y
}

fn to_primitive(u: &State, gamma: f64) -> State {
    [u[0], u[1] / u[0], u[2] / u[0], pressure_raw(u, gamma)]
}

fn from_primitive(w: &State, gamma: f64) -> State {
    let ke = 0.5 * w[0] * (w[1] * w[1] + w[2] * w[2]);
    [w[0], w[0] * w[1], w[0] * w[2], w[3] / (gamma - 1.0) + ke]
}

/// Interface states `(U^-, U^+)` at `x_{j+1/2}` from `s[0..6] = U_{j-2..=j+3}`.
fn interface_states(s: &[State; 6], vars: Variables, gamma: f64, eps: f64) -> (State, State) {
    let mut minus = [0.0; 4];
    let mut plus = [0.0; 4];
    match vars {
        Variables::Characteristic => {
            let (l, r) = roe_eigenvectors(&s[2], &s[3], gamma);
            let w: Vec<State> = s.iter().map(|u| mat_vec(&l, u)).collect();
            let mut wm = [0.0; 4];
            let mut wp = [0.0; 4];
            for k in 0..4 {
                wm[k] = weno_z([w[0][k], w[1][k], w[2][k], w[3][k], w[4][k]], eps);
                wp[k] = weno_z([w[5][k], w[4][k], w[3][k], w[2][k], w[1][k]], eps);
            }
            minus = mat_vec(&r, &wm);
            plus = mat_vec(&r, &wp);
        }
        Variables::Primitive => {
            let w: Vec<State> = s.iter().map(|u| to_primitive(u, gamma)).collect();
            for k in 0..4 {
                minus[k] = weno_z([w[0][k], w[1][k], w[2][k], w[3][k], w[4][k]], eps);
                plus[k] = weno_z([w[5][k], w[4][k], w[3][k], w[2][k], w[1][k]], eps);
            }
            minus = from_primitive(&minus, gamma);
            plus = from_primitive(&plus, gamma);
        }
    }
    (minus, plus)
}

fn central_upwind(um: &State, up: &State, gamma: f64) -> State {
    let fm = physical_flux(um, gamma);
    let fp = physical_flux(up, gamma);
    let cm = (gamma * pressure_raw(um, gamma) / um[0]).sqrt();
    let cp = (gamma * pressure_raw(up, gamma) / up[0]).sqrt();
    let vm = um[1] / um[0];
    let vp = up[1] / up[0];
    let ap = (vm + cm).max(vp + cp).max(0.0);
    let am = (vm - cm).min(vp - cp).min(0.0);
    let span = ap - am;
    let mut h = [0.0; 4];
    if span <= 1e-14 {
        for k in 0..4 {
            h[k] = 0.5 * (fm[k] + fp[k]);
        }
        return h;
    }
    let prod = ap * am / span;
    for k in 0..4 {
        h[k] = (ap * fm[k] - am * fp[k]) / span + prod * (up[k] - um[k]);
    }
    h
}

/// Result of one line sweep.
pub(crate) struct LineOutcome {
    pub fallbacks: u64,
    pub bad_interface: Option<usize>,
}

/// Writes `-(H_{j+1/2} - H_{j-1/2}) / dx` for the periodic line `u` into `out`.
pub(crate) fn line_tendency(
    u: &[State],
    dx: f64,
    gamma: f64,
    eps: f64,
    vars: Variables,
    ws: &mut Workspace,
    out: &mut [State],
) -> LineOutcome {
    let n = u.len();
    let idx = |j: isize| -> usize { j.rem_euclid(n as isize) as usize };
    ws.flux.clear();
    ws.flux.extend(u.iter().map(|s| physical_flux(s, gamma)));
    ws.h.clear();
    ws.h.resize(n, [0.0; 4]);
    let mut outcome = LineOutcome {
        fallbacks: 0,
        bad_interface: None,
    };
    for j in 0..n {
        let ji = j as isize;
        let stencil = [
            u[idx(ji - 2)],
            u[idx(ji - 1)],
            u[j],
            u[idx(ji + 1)],
            u[idx(ji + 2)],
            u[idx(ji + 3)],
        ];
        let (mut um, mut up) = interface_states(&stencil, vars, gamma, eps);
        if !is_physical(&um, gamma) || !is_physical(&up, gamma) {
            um = stencil[2];
            up = stencil[3];
            outcome.fallbacks += 1;
            if !is_physical(&um, gamma) || !is_physical(&up, gamma) {
                outcome.bad_interface.get_or_insert(j);
                continue;
            }
        }
        let cu = central_upwind(&um, &up, gamma);
        let f = |k: isize| ws.flux[idx(ji + k)];
        let (f0, f1, f2, f3, f4, f5) = (f(-2), f(-1), f(0), f(1), f(2), f(3));
        let h = &mut ws.h[j];
        for k in 0..4 {
            // dx^2 F_xx and dx^4 F_xxxx at the interface from central differences.
            let d2 = (-5.0 * f0[k] + 39.0 * f1[k] - 34.0 * f2[k] - 34.0 * f3[k] + 39.0 * f4[k]
                - 5.0 * f5[k])
                / 48.0;
            let d4 = 0.5 * (f0[k] - 3.0 * f1[k] + 2.0 * f2[k] + 2.0 * f3[k] - 3.0 * f4[k] + f5[k]);
            h[k] = cu[k] - d2 / 24.0 + 7.0 * d4 / 5760.0;
        }
    }
    let inv = 1.0 / dx;
    for j in 0..n {
        let hr = ws.h[j];
        let hl = ws.h[idx(j as isize - 1)];
        for k in 0..4 {
            out[j][k] = -(hr[k] - hl[k]) * inv;
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvectors_are_inverse_pairs() {
        let gamma = 1.4;
        let ul = [2.0, -1.0, 0.3, 6.6];
        let ur = [1.0, 0.5, -0.2, 6.4];
        let (l, r) = roe_eigenvectors(&ul, &ur, gamma);
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| l[i][k] * r[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn weno_z_is_exact_for_quadratics_and_fifth_order_on_smooth_data() {
        let q = |x: f64| 1.0 + 2.0 * x - 0.7 * x * x;
        let f = [q(-2.0), q(-1.0), q(0.0), q(1.0), q(2.0)];
        assert!((weno_z(f, 1e-12) - q(0.5)).abs() < 1e-12);
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let g = |x: f64| (x * h + 0.3f64).sin();
            let f = [g(-2.0), g(-1.0), g(0.0), g(1.0), g(2.0)];
            errs.push((weno_z(f, 1e-40) - g(0.5)).abs());
            hs.push(h);
        }
        let order = crate::numeric::fitted_order(&hs, &errs);
        assert!(order > 4.7, "order {order}");
    }

    #[test]
    fn central_upwind_is_consistent() {
        let u = [1.3, 0.4, -0.2, 3.0];
        let h = central_upwind(&u, &u, 1.4);
        let f = physical_flux(&u, 1.4);
        for k in 0..4 {
            assert!((h[k] - f[k]).abs() < 1e-14);
        }
    }
}
