use frmpc_solvers::ipm::{solve_nlp_with_stats, kkt_residuals};
use frmpc_solvers::{solve_nlp, IpmOptions, NlpModel, SolveStatus, WarmStart, INF};

/// min (x - 2)^2, 0 <= x <= 1
struct Parabola;

impl NlpModel for Parabola {
    fn num_vars(&self) -> usize {
        1
    }
    fn num_cons(&self) -> usize {
        0
    }
    fn var_bounds(&self, xl: &mut [f64], xu: &mut [f64]) {
        xl[0] = 0.0;
        xu[0] = 1.0;
    }
    fn con_bounds(&self, _: &mut [f64], _: &mut [f64]) {}
    fn initial_point(&self, x: &mut [f64]) {
        x[0] = 0.5;
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (x[0] - 2.0).powi(2)
    }
    fn objective_gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = 2.0 * (x[0] - 2.0);
    }
    fn constraints(&self, _: &[f64], _: &mut [f64]) {}
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        vec![]
    }
    fn jacobian_values(&self, _: &[f64], _: &mut [f64]) {}
    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0)]
    }
    fn hessian_values(&self, _: &[f64], of: f64, _: &[f64], v: &mut [f64]) {
        v[0] = 2.0 * of;
    }
}

struct Rosenbrock;

impl NlpModel for Rosenbrock {
    fn num_vars(&self) -> usize {
        2
    }
    fn num_cons(&self) -> usize {
        0
    }
    fn var_bounds(&self, xl: &mut [f64], xu: &mut [f64]) {
        xl.fill(-INF);
        xu.fill(INF);
    }
    fn con_bounds(&self, _: &mut [f64], _: &mut [f64]) {}
    fn initial_point(&self, x: &mut [f64]) {
        x[0] = -1.2;
        x[1] = 1.0;
    }
    fn objective(&self, x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }
    fn objective_gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
        g[1] = 200.0 * (x[1] - x[0] * x[0]);
    }
    fn constraints(&self, _: &[f64], _: &mut [f64]) {}
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        vec![]
    }
    fn jacobian_values(&self, _: &[f64], _: &mut [f64]) {}
    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0), (1, 0), (1, 1)]
    }
    fn hessian_values(&self, x: &[f64], of: f64, _: &[f64], v: &mut [f64]) {
        v[0] = of * (1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0);
        v[1] = of * (-400.0 * x[0]);
        v[2] = of * 200.0;
    }
}

/// The classical four-variable test problem with one product inequality and
/// one sphere equality.
struct Hs071;

impl NlpModel for Hs071 {
    fn num_vars(&self) -> usize {
        4
    }
    fn num_cons(&self) -> usize {
        2
    }
    fn var_bounds(&self, xl: &mut [f64], xu: &mut [f64]) {
        xl.fill(1.0);
        xu.fill(5.0);
    }
    fn con_bounds(&self, gl: &mut [f64], gu: &mut [f64]) {
        gl[0] = 25.0;
        gu[0] = INF;
        gl[1] = 40.0;
        gu[1] = 40.0;
    }
    fn initial_point(&self, x: &mut [f64]) {
        x.copy_from_slice(&[1.0, 5.0, 5.0, 1.0]);
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2]
    }
    fn objective_gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = x[3] * (2.0 * x[0] + x[1] + x[2]);
        g[1] = x[0] * x[3];
        g[2] = x[0] * x[3] + 1.0;
        g[3] = x[0] * (x[0] + x[1] + x[2]);
    }
    fn constraints(&self, x: &[f64], g: &mut [f64]) {
        g[0] = x[0] * x[1] * x[2] * x[3];
        g[1] = x.iter().map(|v| v * v).sum();
    }
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        (0..2).flat_map(|i| (0..4).map(move |j| (i, j))).collect()
    }
    fn jacobian_values(&self, x: &[f64], v: &mut [f64]) {
        v[0] = x[1] * x[2] * x[3];
        v[1] = x[0] * x[2] * x[3];
        v[2] = x[0] * x[1] * x[3];
        v[3] = x[0] * x[1] * x[2];
        for j in 0..4 {
            v[4 + j] = 2.0 * x[j];
        }
    }
    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        (0..4).flat_map(|i| (0..=i).map(move |j| (i, j))).collect()
    }
    fn hessian_values(&self, x: &[f64], of: f64, l: &[f64], v: &mut [f64]) {
        let mut h = [[0.0; 4]; 4];
        h[0][0] = of * 2.0 * x[3];
        h[1][0] = of * x[3];
        h[2][0] = of * x[3];
        h[3][0] = of * (2.0 * x[0] + x[1] + x[2]);
        h[3][1] = of * x[0];
        h[3][2] = of * x[0];
        h[1][0] += l[0] * x[2] * x[3];
        h[2][0] += l[0] * x[1] * x[3];
        h[3][0] += l[0] * x[1] * x[2];
        h[2][1] += l[0] * x[0] * x[3];
        h[3][1] += l[0] * x[0] * x[2];
        h[3][2] += l[0] * x[0] * x[1];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] += 2.0 * l[1];
        }
        let mut k = 0;
        for i in 0..4 {
            for j in 0..=i {
                v[k] = h[i][j];
                k += 1;
            }
        }
    }
}

#[test]
fn parabola_stops_at_active_bound() {
    let r = solve_nlp(&Parabola, &IpmOptions::default(), None);
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.x[0] - 1.0).abs() < 1e-7, "{:?}", r.x);
    // upper bound multiplier balances the gradient -2
    assert!(r.z_u[0] > 0.0);
    assert!((r.z_u[0] - 2.0).abs() < 1e-6);
}

#[test]
fn rosenbrock_from_classical_start() {
    let r = solve_nlp(&Rosenbrock, &IpmOptions::default(), None);
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    let mut g = [0.0; 2];
    Rosenbrock.objective_gradient(&r.x, &mut g);
    assert!(g[0].abs().max(g[1].abs()) < 1e-6);
}

#[test]
fn hs071_reaches_known_optimum() {
    let r = solve_nlp(&Hs071, &IpmOptions::default(), None);
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - 17.014017145).abs() < 1e-6, "{}", r.objective);
    let res = kkt_residuals(&Hs071, &r.x, &r.y, &r.z_l, &r.z_u);
    assert!(res.primal < 1e-7 && res.dual < 1e-6 && res.complementarity < 1e-6, "{res:?}");
}

#[test]
fn repeated_solves_are_bit_identical() {
    let a = solve_nlp(&Hs071, &IpmOptions::default(), None);
    let b = solve_nlp(&Hs071, &IpmOptions::default(), None);
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(
        a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn warm_start_from_solution_is_not_worse() {
    let cold = solve_nlp(&Hs071, &IpmOptions::default(), None);
    let warm = WarmStart {
        x: cold.x.clone(),
        y: Some(cold.y.clone()),
    };
    let hot = solve_nlp(&Hs071, &IpmOptions::default(), Some(&warm));
    assert_eq!(hot.status, SolveStatus::Optimal);
    assert!(hot.objective <= cold.objective + 1e-6 * (1.0 + cold.objective.abs()));
}

#[test]
fn iteration_budget_is_respected() {
    let opts = IpmOptions {
        max_iter: 3,
        ..IpmOptions::default()
    };
    let r = solve_nlp(&Rosenbrock, &opts, None);
    assert_eq!(r.status, SolveStatus::IterationLimit);
    assert_eq!(r.iterations, 3);
}

#[test]
fn statistics_count_factorisations() {
    let (r, st) = solve_nlp_with_stats(&Hs071, &IpmOptions::default(), None);
    assert!(st.factorizations >= r.iterations);
    assert!(st.flops > 0);
    assert_eq!(st.kkt_dim, 4 + 1 + 2);
}
