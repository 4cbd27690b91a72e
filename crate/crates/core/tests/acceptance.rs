//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortex_chorus::analysis::{ngon_maximality_test, polygon_trap_coefficient, shub_separation_scan};
use vortex_chorus::choreography::{chore_defect, fs_diameter, reduce_loop, reduced_space, sample_flow};
use vortex_chorus::hamiltonians::{energy, moment_of_inertia, Family, SystemSpec, VortexState};
use vortex_chorus::integrate::{find_relative_equilibrium, flow, flow_map};
use vortex_chorus::projective::{
    fs_distance, hopf_project, lim_transform, reduce_cpn1, reduce_cpn2, sigma1, sigma2, sigma2_composite,
    Direction, LimFrame, ProjectivePoint,
};
use vortex_chorus::search::{search, SearchConfig};
use vortex_chorus::spheres::{
    equivariance_defect, evaluate_sphere, fs_area, ExtendedComplex, Region, SphereMap, Target,
    DEFAULT_QUAD_TOL,
};

fn verdict(k: usize, name: &str, pass: bool, detail: String) {
    println!("criterion {k:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {k} failed: {detail}");
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Uniform points in a disc with a minimal pairwise separation.
fn random_points(rng: &mut ChaCha8Rng, n: usize, radius: f64, sep: f64) -> VortexState {
    loop {
        let z: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let st = VortexState::new(z);
        if st.min_pair_distance_sqr() > sep * sep {
            return st;
        }
    }
}

fn random_projective(rng: &mut ChaCha8Rng, dim: usize) -> ProjectivePoint {
    let v = (0..dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ProjectivePoint::new(v).unwrap()
}

/// Sine of the angle between the complex lines of `a` and `b`, from the
/// component of `b` orthogonal to `a`.
fn proj_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let inner: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() / (na * na);
    a.iter().zip(b).map(|(x, y)| (y - inner * x).norm_sqr()).sum::<f64>().sqrt() / nb
}

#[test]
fn criterion_01_conservation() {
    let spec = SystemSpec::euler(vec![1.0; 4]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let z0 = random_points(&mut rng, 4, 1.0, 0.2);
    let clock = Instant::now();
    let traj = flow(&spec, &z0, 50.0, 1e-10).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let d = traj.drift();
    let worst = d.h.max(d.i).max(d.p).max(d.q);
    verdict(
        1,
        "conservation",
        worst < 1e-8 && secs < 10.0,
        format!("drift H {:.1e} I {:.1e} P {:.1e} Q {:.1e}, {secs:.2} s", d.h, d.i, d.p, d.q),
    );
}

#[test]
fn criterion_02_lim_frame() {
    let mut worst_u: f64 = 0.0;
    let mut worst_s: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    for n in 1..=16 {
        let f = LimFrame::new(n).unwrap();
        worst_u = worst_u.max(f.unitarity_defect());
        worst_s = worst_s.max(f.shift_offdiagonal());
        // the diagonal from an explicit triple product
        let u = f.matrix();
        let p = u * LimFrame::shift_matrix(n) * u.adjoint();
        for (k, e) in f.shift_eigenvalues().iter().enumerate() {
            let want = Complex64::from_polar(1.0, -2.0 * PI * (k + 1) as f64 / n as f64);
            worst_eig = worst_eig.max((p[(k, k)] - want).norm()).max((e - want).norm());
        }
    }
    verdict(
        2,
        "lim frame",
        worst_u < 1e-13 && worst_s < 1e-13 && worst_eig < 1e-13,
        format!("|UU*-I| {worst_u:.1e}, offdiag {worst_s:.1e}, eigen {worst_eig:.1e}"),
    );
}

#[test]
fn criterion_03_sigma_actions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut order, mut iso, mut diagram, mut lift): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for n in 3..=9 {
        let frame = LimFrame::new(n).unwrap();
        for _ in 0..100 {
            let p = random_projective(&mut rng, n);
            let q = random_projective(&mut rng, n);
            let mut s = p.clone();
            for _ in 0..n {
                s = sigma1(&s);
            }
            order = order.max(fs_distance(&s, &p).unwrap());
            let d0 = fs_distance(&p, &q).unwrap();
            iso = iso.max((fs_distance(&sigma1(&p), &sigma1(&q)).unwrap() - d0).abs());

            let a = random_projective(&mut rng, n - 1);
            let b = random_projective(&mut rng, n - 1);
            let mut s = a.clone();
            for _ in 0..n {
                s = sigma2(&s);
            }
            order = order.max(fs_distance(&s, &a).unwrap());
            let d0 = fs_distance(&a, &b).unwrap();
            iso = iso.max((fs_distance(&sigma2(&a), &sigma2(&b)).unwrap() - d0).abs());

            // relabeling then reducing equals reducing then acting
            let z = random_points(&mut rng, n, 1.0, 1e-3);
            let zc = z.translated(-z.centroid());
            let shifted = zc.cyclic_shift();
            diagram = diagram.max(
                fs_distance(&reduce_cpn1(&shifted).unwrap(), &sigma1(&reduce_cpn1(&zc).unwrap())).unwrap(),
            );
            diagram = diagram.max(
                fs_distance(
                    &reduce_cpn2(&frame, &shifted).unwrap(),
                    &sigma2(&reduce_cpn2(&frame, &zc).unwrap()),
                )
                .unwrap(),
            );

            // the composite action does not see the representative
            let lam = Complex64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(0.0..2.0 * PI));
            let a2 = ProjectivePoint::new(a.coords().iter().map(|w| w * lam).collect()).unwrap();
            let r1 = sigma2_composite(&frame, &a).unwrap();
            let r2 = sigma2_composite(&frame, &a2).unwrap();
            lift = lift.max(fs_distance(&r1, &r2).unwrap());
            lift = lift.max(fs_distance(&r1, &sigma2(&a)).unwrap());
        }
        // explicit frame coordinates of the relabeled state, as a cross-check
        let z = random_points(&mut rng, n, 1.0, 1e-3);
        let w = lim_transform(&frame, z.points(), Direction::Forward).unwrap();
        let ws = lim_transform(&frame, z.cyclic_shift().points(), Direction::Forward).unwrap();
        for k in 0..n {
            let ph = Complex64::from_polar(1.0, -2.0 * PI * (k + 1) as f64 / n as f64);
            diagram = diagram.max((ws[k] - ph * w[k]).norm());
        }
        diagram = diagram.max(proj_gap(hopf_project(z.points()).unwrap().coords(), z.points()));
    }
    verdict(
        3,
        "sigma actions",
        order < 1e-12 && iso < 1e-12 && diagram < 1e-12 && lift < 1e-12,
        format!("order {order:.1e}, isometry {iso:.1e}, diagram {diagram:.1e}, lift {lift:.1e}"),
    );
}

/// Frame image of the configuration `z_j = exp(2 pi i s j / n)` with the
/// centroid coordinate dropped, by direct summation.
fn dft_polygon(n: usize, s: usize) -> Vec<Complex64> {
    (1..n)
        .map(|k| {
            (1..=n)
                .map(|j| {
                    Complex64::from_polar(1.0, 2.0 * PI * (s * j) as f64 / n as f64)
                        * Complex64::from_polar(
                            1.0 / (n as f64).sqrt(),
                            -2.0 * PI * (j * k) as f64 / n as f64,
                        )
                })
                .sum()
        })
        .collect()
}

#[test]
fn criterion_04_spheres() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut defect, mut ends, mut area_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut cases = vec![];
    cases.extend((3..=12).map(|n| (n, Target::CPn1)));
    cases.extend((4..=12).step_by(2).map(|n| (n, Target::CPn2)));
    for (n, target) in cases {
        let s = SphereMap::new(n, target).unwrap();
        let pts: Vec<ExtendedComplex> = (0..100)
            .map(|_| {
                let r = 10f64.powf(rng.gen_range(-2.0..2.0));
                ExtendedComplex::Finite(Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI)))
            })
            .collect();
        defect = defect.max(equivariance_defect(&s, &pts));
        let (want_a, want_b): (Vec<Complex64>, Vec<Complex64>) = match target {
            Target::CPn1 => (
                vec![c(1.0, 0.0); n],
                (1..=n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect(),
            ),
            Target::CPn2 => (dft_polygon(n, 2), dft_polygon(n, 1)),
        };
        ends = ends.max(proj_gap(s.a.coords(), &want_a)).max(proj_gap(s.b.coords(), &want_b));
        let at0 = evaluate_sphere(&s, ExtendedComplex::Finite(c(0.0, 0.0)));
        let atinf = evaluate_sphere(&s, ExtendedComplex::Infinity);
        let (w0, winf) = match target {
            Target::CPn1 => (&want_b, &want_a),
            Target::CPn2 => (&want_a, &want_b),
        };
        ends = ends.max(proj_gap(at0.coords(), w0)).max(proj_gap(atinf.coords(), winf));
        let area = fs_area(&s, Region::Full, DEFAULT_QUAD_TOL).unwrap();
        area_err = area_err.max((area - PI).abs());
    }
    verdict(
        4,
        "explicit spheres",
        defect < 1e-12 && ends < 1e-12 && area_err < 1e-6,
        format!("defect {defect:.1e}, endpoints {ends:.1e}, |area - pi| {area_err:.1e}"),
    );
}

#[test]
fn criterion_05_thomson() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut res, mut omega_err, mut closed_err, mut diam): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for n in 2..=8 {
        let spec = SystemSpec::euler(vec![1.0; n]).unwrap();
        let guess = VortexState::new(
            VortexState::polygon(n, 1.0)
                .points()
                .iter()
                .map(|w| w + c(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3)))
                .collect(),
        );
        let guess = guess.translated(-guess.centroid());
        let re = find_relative_equilibrium(&spec, &guess, n as f64).unwrap();
        res = res.max(re.residual);
        // phase rate of vortex 1 about the center over a short flow
        let dt = 0.05;
        let later = flow_map(&spec, &re.z, dt, 1e-13).unwrap();
        let rate = -((later.points()[0] - re.center) / (re.z.points()[0] - re.center)).arg() / dt;
        omega_err = omega_err.max((re.omega - rate).abs());
        // regular n-gon of radius 1 turns counter-clockwise at (n-1)/(4 pi)
        closed_err = closed_err.max((re.omega + (n as f64 - 1.0) / (4.0 * PI)).abs());
        let lp = sample_flow(&spec, &re.z, re.period(), 8 * n, 1e-12).unwrap();
        let red = reduce_loop(&lp, reduced_space(&spec)).unwrap();
        diam = diam.max(fs_diameter(&red).unwrap());
    }
    verdict(
        5,
        "thomson polygon",
        res < 1e-10 && omega_err < 1e-8 && closed_err < 1e-8 && diam < 1e-10,
        format!("residual {res:.1e}, omega vs rate {omega_err:.1e}, vs closed form {closed_err:.1e}, diameter {diam:.1e}"),
    );
}

#[test]
fn criterion_06_chord_log() {
    let mut ok = true;
    let (mut worst_grad, mut worst_margin, mut formula): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 3..=8 {
        let rho = 1.3;
        let rep = ngon_maximality_test(n, rho, 10_000, 60 + n as u64).unwrap();
        // product of the chords from one vertex of the unit n-gon is n
        let pairs = (n * (n - 1) / 2) as f64;
        let want = 0.5 * n as f64 * (n as f64).ln() + pairs * rho.ln();
        formula = formula.max((rep.ngon_value - want).abs());
        // independent sampling with positions instead of gaps
        let mut best = f64::NEG_INFINITY;
        for _ in 0..10_000 {
            let p: Vec<Complex64> =
                (0..n).map(|_| Complex64::from_polar(rho, rng.gen_range(0.0..2.0 * PI))).collect();
            let mut s = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    s += (p[i] - p[j]).norm().ln();
                }
            }
            best = best.max(s);
        }
        ok &= rep.pass && rep.max_sampled <= rep.ngon_value && best <= want + 1e-12;
        worst_grad = worst_grad.max(rep.gradient_norm);
        worst_margin = worst_margin.min(rep.margin).min(want - best);
    }
    verdict(
        6,
        "chord-log maximality",
        ok && worst_grad < 1e-10 && formula < 1e-12,
        format!("min margin {worst_margin:.3e}, gradient {worst_grad:.1e}, closed form {formula:.1e}"),
    );
}

/// Order-n Fourier magnitude by a plain 4096-point trapezoidal sum.
fn trap_oracle(alpha: f64, beta: f64, n: usize) -> f64 {
    let m = 4096;
    let mut acc = c(0.0, 0.0);
    for j in 0..m {
        let th = 2.0 * PI * j as f64 / m as f64;
        let f: f64 = (0..n).map(|k| alpha + beta * (th + 2.0 * PI * k as f64 / n as f64).cos()).product();
        acc += f * Complex64::from_polar(1.0, -(n as f64) * th);
    }
    2.0 * acc.norm() / m as f64
}

#[test]
fn criterion_07_trap_coefficient() {
    let (mut grid_err, mut zero_slice, mut closed): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 2..=6 {
        for i in 0..10 {
            let alpha = -1.5 + 3.0 * i as f64 / 9.0;
            for j in 0..10 {
                let beta = -1.0 + 2.0 * j as f64 / 9.0;
                let v = polygon_trap_coefficient(alpha, beta, n);
                grid_err = grid_err.max((v - trap_oracle(alpha, beta, n)).abs());
                closed = closed.max((v - 2.0 * (beta.abs() / 2.0).powi(n as i32)).abs());
            }
            zero_slice = zero_slice.max(polygon_trap_coefficient(alpha, 0.0, n).abs());
        }
    }
    verdict(
        7,
        "trap coefficient",
        grid_err < 1e-10 && zero_slice < 1e-14 && closed < 1e-10,
        format!("vs grid {grid_err:.1e}, beta=0 {zero_slice:.1e}, vs 2(|beta|/2)^n {closed:.1e}"),
    );
}

#[test]
fn criterion_08_shub_scan() {
    let spec = SystemSpec::bec(vec![1.0; 3], 1.0, 1.0).unwrap();
    let rep = shub_separation_scan(&spec, 0.3, 200, 8).unwrap();
    let converged: Vec<_> = rep.starts.iter().filter(|s| s.converged).collect();
    let all_separated = converged.iter().all(|s| s.min_pair_sqr.is_some_and(|m| m > 1e-6));
    let eps_ok = rep.epsilon_hat.is_some_and(|e| e > 0.0);
    verdict(
        8,
        "BEC separation",
        !converged.is_empty() && all_separated && eps_ok && rep.near_collision == 0,
        format!(
            "{} of 200 converged, eps_hat {:?}, near collisions {}",
            converged.len(),
            rep.epsilon_hat,
            rep.near_collision
        ),
    );
}

#[test]
fn criterion_09_search_contract() {
    let tol = 1e-9;
    let mut problems = vec![];
    // contract on a perturbed BEC run
    let spec = SystemSpec::bec(vec![1.0; 3], 1.0, 1.0).unwrap();
    let cfg = SearchConfig {
        i_level: 0.3,
        n_starts: 24,
        seed: 9,
        perturbation_scale: 0.05,
        newton_tol: tol,
        ..Default::default()
    };
    let out = search(&spec, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for r in &out.results {
        let n = spec.n();
        let lp = sample_flow(&spec, &r.z0, n as f64 * r.t_seg, 8 * n, 1e-13).unwrap();
        let red = reduce_loop(&lp, reduced_space(&spec)).unwrap();
        let defect = chore_defect(&red).unwrap();
        let h0 = energy(&spec, &r.z0).unwrap();
        let mut dh: f64 = 0.0;
        let mut di: f64 = 0.0;
        for s in lp.samples() {
            let st = VortexState::new(s.clone());
            dh = dh.max((energy(&spec, &st).unwrap() - h0).abs());
            di = di.max((moment_of_inertia(&spec, &st) - cfg.i_level).abs());
        }
        worst = worst.max(defect).max(dh).max(di);
        if !(r.residual < tol && defect < 10.0 * tol && dh < 10.0 * tol && di < 10.0 * tol) {
            problems.push(format!(
                "start {}: residual {:e} defect {defect:e} dH {dh:e} dI {di:e}",
                r.start, r.residual
            ));
        }
    }
    // unperturbed polygon seeds give back the Thomson equilibrium
    let mut ngon: f64 = 0.0;
    for n in 3..=6 {
        let spec = SystemSpec::euler(vec![1.0; n]).unwrap();
        let cfg =
            SearchConfig { i_level: n as f64, n_starts: 1, perturbation_scale: 0.0, ..Default::default() };
        let found = search(&spec, &cfg).unwrap();
        let re = find_relative_equilibrium(&spec, &VortexState::polygon(n, 1.0), n as f64).unwrap();
        match found.results.first() {
            Some(r) => {
                for (a, b) in r.z0.points().iter().zip(re.z.points()) {
                    ngon = ngon.max((a - b).norm());
                }
                let want = Complex64::from_polar(1.0, -re.omega * r.t_seg + 2.0 * PI / n as f64);
                ngon = ngon.max((Complex64::from_polar(1.0, r.theta) - want).norm());
            }
            None => problems.push(format!("n = {n}: polygon seed produced no result")),
        }
    }
    if ngon > 1e-8 {
        problems.push(format!("polygon mismatch {ngon:e}"));
    }
    let again = search(&spec, &cfg).unwrap();
    if again != out {
        problems.push("rerun with the same seed differs".into());
    }
    verdict(
        9,
        "search contract",
        problems.is_empty(),
        format!(
            "{} orbits, worst check {worst:.1e}, polygon {ngon:.1e}{}",
            out.results.len(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    );
}

#[test]
fn criterion_10_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for family in [Family::Euler, Family::Bec] {
        let spec = SystemSpec::identical(family, 4, 1.0, 1.0).unwrap();
        let radius = if family == Family::Bec { 0.7 } else { 1.0 };
        for _ in 0..20 {
            let z0 = random_points(&mut rng, 4, radius, 0.2);
            let a = flow_map(&spec, &z0.cyclic_shift(), 10.0, 1e-12).unwrap();
            let b = flow_map(&spec, &z0, 10.0, 1e-12).unwrap().cyclic_shift();
            for (x, y) in a.points().iter().zip(b.points()) {
                worst = worst.max((x - y).norm());
            }
        }
    }
    verdict(10, "flow equivariance", worst < 1e-8, format!("max deviation {worst:.1e}"));
}
