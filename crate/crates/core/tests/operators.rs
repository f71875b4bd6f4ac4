//! Interaction operators against brute-force references written from their
//! formulas, plus the conservation and consistency properties.

mod common;

use std::f64::consts::PI;

use common::*;
use nauticle::scheduler::{run_with, RunOptions};
use nauticle::Case;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BOUNDARIES: [&str; 3] = ["periodic", "symmetric", "cutoff"];
const TOL: f64 = 1e-12;

fn random_points(seed: u64, n: usize, extent: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| vec![rng.gen_range(0.0..extent), rng.gen_range(0.0..extent)])
        .collect()
}

/// 2D case on a 5x5 grid of 0.5 cells with particles at `points`.
fn planar_case(
    dir: &std::path::Path,
    points: &[Vec<f64>],
    boundary: [usize; 2],
    constants: &[(&str, &str)],
    fields: &[(&str, &str)],
    equations: &[(&str, &str)],
    seed: u64,
) -> Case {
    write_points(dir, "pts.txt", points);
    let mut deck = Deck::new(
        "0.5|0.5",
        "0|0",
        "5|5",
        &format!("{}|{}", BOUNDARIES[boundary[0]], BOUNDARIES[boundary[1]]),
        Grid::File("pts.txt".into()),
    );
    deck.constants = pairs(constants);
    deck.fields = pairs(fields);
    deck.equations = pairs(equations);
    assemble(&deck.text(), dir, 1, seed)
}

fn vec2(case: &Case, name: &str, i: usize) -> [f64; 2] {
    let s = field(case, name)[i].as_slice();
    [s[0], s[1]]
}

fn sc(case: &Case, name: &str, i: usize) -> f64 {
    field(case, name)[i].value()
}

fn mirror(v: [f64; 2], guide: [i8; 3]) -> [f64; 2] {
    [v[0] * guide[0] as f64, v[1] * guide[1] as f64]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Sum with a running magnitude for reassociation-aware comparison.
#[derive(Default, Clone, Copy)]
struct Acc {
    v: [f64; 2],
    size: f64,
}

impl Acc {
    fn add(&mut self, t: [f64; 2]) {
        self.v[0] += t[0];
        self.v[1] += t[1];
        self.size += t[0].abs() + t[1].abs();
    }

    fn scaled(self, s: f64) -> Acc {
        Acc {
            v: [self.v[0] * s, self.v[1] * s],
            size: self.size * s.abs(),
        }
    }

    fn check(&self, got: [f64; 2], what: &str, i: usize) -> Result<(), TestCaseError> {
        for a in 0..2 {
            let err = (got[a] - self.v[a]).abs();
            prop_assert!(
                err <= TOL * self.size.max(1e-300),
                "{what} particle {i} axis {a}: {} vs {} (scale {})",
                got[a],
                self.v[a],
                self.size
            );
        }
        Ok(())
    }
}

struct Wendland2 {
    h: f64,
    alpha: f64,
}

impl Wendland2 {
    fn new(h: f64) -> Self {
        Wendland2 {
            h,
            alpha: 7.0 / (4.0 * PI * h * h),
        }
    }

    fn w(&self, r: f64) -> f64 {
        let q = r / self.h;
        if q >= 2.0 {
            0.0
        } else {
            self.alpha * (1.0 - q / 2.0).powi(4) * (2.0 * q + 1.0)
        }
    }

    /// `grad_i W = f * rel`.
    fn f(&self, r: f64) -> f64 {
        let q = r / self.h;
        if q >= 2.0 {
            0.0
        } else {
            5.0 * self.alpha * (1.0 - q / 2.0).powi(3) / (self.h * self.h)
        }
    }
}

fn dist(rel: [f64; 3]) -> f64 {
    (rel[0] * rel[0] + rel[1] * rel[1]).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sph_operators_match_oracle(seed in any::<u64>(), n in 2usize..100, bx in 0usize..3, by in 0usize..3) {
        let dir = tempfile::tempdir().unwrap();
        let points = random_points(seed, n, 2.5);
        let rad = 0.45;
        let case = {
            let mut case = planar_case(
                dir.path(),
                &points,
                [bx, by],
                &[("rad", "0.45")],
                &[
                    ("A", "rand(-1,1)"),
                    ("v", "rand(-1,1)|rand(-1,1)"),
                    ("rho", "rand(900,1100)"),
                    ("m", "rand(0.5,1.5)"),
                    ("s", "0"), ("g", "0|0"), ("dv", "0"), ("p", "0|0"), ("l", "0"), ("lv", "0|0"), ("av", "0|0"),
                ],
                &[
                    ("s", "s=sph_S(A,m,rho,Wp52220,rad)"),
                    ("g", "g=sph_D00(A,m,rho,Wp52220,rad)"),
                    ("dv", "dv=sph_D00(v,m,rho,Wp52220,rad)"),
                    ("p", "p=sph_G11(A,m,rho,Wp52220,rad)"),
                    ("l", "l=sph_L0(A,m,rho,Wp52220,rad)"),
                    ("lv", "lv=sph_L0(v,m,rho,Wp52220,rad)"),
                    ("av", "av=sph_A(v,m,rho,Wp52220,rad)"),
                ],
                seed,
            );
            case.solve_step().unwrap();
            case
        };
        let k = Wendland2::new(rad / 2.0);
        let ps = case.particles();
        for i in 0..n {
            let (ai, vi, rhoi) = (sc(&case, "A", i), vec2(&case, "v", i), sc(&case, "rho", i));
            let (mut s, mut g, mut dv, mut p, mut l, mut lv, mut av) =
                (Acc::default(), Acc::default(), Acc::default(), Acc::default(), Acc::default(), Acc::default(), Acc::default());
            for (j, guide, rel) in brute_force_pairs(ps, i, rad) {
                let r = dist(rel);
                let (aj, rhoj, mj) = (sc(&case, "A", j), sc(&case, "rho", j), sc(&case, "m", j));
                let vj = mirror(vec2(&case, "v", j), guide);
                let vol = mj / rhoj;
                s.add([aj * vol * k.w(r), 0.0]);
                if r == 0.0 {
                    continue;
                }
                let gw = [k.f(r) * rel[0], k.f(r) * rel[1]];
                g.add([(aj - ai) * vol * gw[0], (aj - ai) * vol * gw[1]]);
                dv.add([dot(sub(vj, vi), gw) * vol, 0.0]);
                let coef = (ai / (rhoi * rhoi) + aj / (rhoj * rhoj)) * mj;
                p.add([coef * gw[0], coef * gw[1]]);
                l.add([2.0 * (aj - ai) * k.f(r) * vol, 0.0]);
                let dvl = sub(vj, vi);
                lv.add([2.0 * dvl[0] * k.f(r) * vol, 2.0 * dvl[1] * k.f(r) * vol]);
                let vr = dot(sub(vj, vi), [rel[0], rel[1]]);
                if vr < 0.0 {
                    let pi = vr / (rhoi * r * r);
                    av.add([pi * mj * gw[0], pi * mj * gw[1]]);
                }
            }
            s.check([sc(&case, "s", i), 0.0], "sph_S", i)?;
            g.check(vec2(&case, "g", i), "sph_D00 scalar", i)?;
            dv.check([sc(&case, "dv", i), 0.0], "sph_D00 vector", i)?;
            p.scaled(rhoi).check(vec2(&case, "p", i), "sph_G11", i)?;
            l.check([sc(&case, "l", i), 0.0], "sph_L0 scalar", i)?;
            lv.check(vec2(&case, "lv", i), "sph_L0 vector", i)?;
            av.check(vec2(&case, "av", i), "sph_A", i)?;
        }
    }

    #[test]
    fn dem_matches_oracle(seed in any::<u64>(), n in 2usize..100, bx in 0usize..3, by in 0usize..3) {
        let dir = tempfile::tempdir().unwrap();
        let points = random_points(seed, n, 2.5);
        let mut case = planar_case(
            dir.path(),
            &points,
            [bx, by],
            &[("cf", "0.3"), ("damp", "0.7"), ("rad", "0.25")],
            &[
                ("v", "rand(-1,1)|rand(-1,1)"),
                ("R", "rand(0.05,0.12)"),
                ("E", "rand(1e6,3e6)"),
                ("nu", "rand(0.2,0.4)"),
                ("m", "rand(0.5,1.5)"),
                ("a", "0|0"),
                ("fw", "0|0"),
            ],
            &[
                ("contact", "a=dem_l(v,R,E,nu,m,cf,rad,damp)"),
                ("walls", "fw=dem_boundary_force(v,R,E,nu,m,cf,rad,damp)"),
            ],
            seed,
        );
        case.solve_step().unwrap();
        let ps = case.particles();
        for i in 0..n {
            let (vi, ri, ei, nui, mi) =
                (vec2(&case, "v", i), sc(&case, "R", i), sc(&case, "E", i), sc(&case, "nu", i), sc(&case, "m", i));
            let mut all = Acc::default();
            let mut walls = Acc::default();
            for (j, guide, rel) in brute_force_pairs(ps, i, 0.25) {
                let d = dist(rel);
                let (rj, ej, nuj, mj) = (sc(&case, "R", j), sc(&case, "E", j), sc(&case, "nu", j), sc(&case, "m", j));
                let delta = ri + rj - d;
                if d == 0.0 || delta <= 0.0 {
                    continue;
                }
                let r_eff = ri * rj / (ri + rj);
                let m_eff = mi * mj / (mi + mj);
                let e_eff = 1.0 / ((1.0 - nui * nui) / ei + (1.0 - nuj * nuj) / ej);
                let stiff = 4.0 / 3.0 * r_eff.sqrt() * e_eff;
                let damping = 0.7 * (m_eff * stiff).sqrt() / 8.0;
                let nrm = [rel[0] / d, rel[1] / d];
                let vji = sub(mirror(vec2(&case, "v", j), guide), vi);
                let vn = dot(vji, nrm);
                let fnorm = stiff * delta.powf(1.5) + damping * delta.powf(0.25) * (-vn);
                let mut f = [-fnorm * nrm[0], -fnorm * nrm[1]];
                let vt = [vji[0] - vn * nrm[0], vji[1] - vn * nrm[1]];
                let vt_len = vt[0].hypot(vt[1]);
                if vt_len >= 1e-12 {
                    f[0] += 0.3 * fnorm.abs() * vt[0] / vt_len;
                    f[1] += 0.3 * fnorm.abs() * vt[1] / vt_len;
                }
                all.add(f);
                if guide.contains(&-1) {
                    walls.add(f);
                }
            }
            all.scaled(1.0 / mi).check(vec2(&case, "a", i), "dem_l", i)?;
            walls.check(vec2(&case, "fw", i), "dem_boundary_force", i)?;
        }
    }

    #[test]
    fn sfm_matches_oracle(seed in any::<u64>(), n in 2usize..100, bx in 0usize..3, by in 0usize..3) {
        let dir = tempfile::tempdir().unwrap();
        let points = random_points(seed, n, 2.5);
        let mut case = planar_case(
            dir.path(),
            &points,
            [bx, by],
            &[("v0", "1.3"), ("A", "2000"), ("B", "0.08"), ("k", "1.2e5"), ("tau", "0.5")],
            &[
                ("v", "rand(-1,1)|rand(-1,1)"),
                ("target", "rand(0,2.5)|rand(0,2.5)"),
                ("R", "rand(0.1,0.3)"),
                ("c", "rand(0,50)"),
                ("m", "rand(60,90)"),
                ("a", "0|0"),
            ],
            &[("sfm", "a=sfm(v,v0,target,R,A,B,k,c,m,tau)")],
            seed,
        );
        case.solve_step().unwrap();
        let ps = case.particles();
        for i in 0..n {
            let x = ps.position(i).as_slice();
            let (vi, ri, ci, mi) = (vec2(&case, "v", i), sc(&case, "R", i), sc(&case, "c", i), sc(&case, "m", i));
            let to = sub(vec2(&case, "target", i), [x[0], x[1]]);
            let len = to[0].hypot(to[1]);
            let mut acc = Acc::default();
            acc.add([(1.3 * to[0] / len - vi[0]) / 0.5, (1.3 * to[1] / len - vi[1]) / 0.5]);
            for (j, _, rel) in brute_force_pairs(ps, i, 0.5) {
                let d = dist(rel);
                if !(d > 0.0 && d < 0.5) {
                    continue;
                }
                let rij = ri + sc(&case, "R", j);
                let cij = 0.5 * (ci + sc(&case, "c", j));
                let body = if rij > d { 1.2e5 * (rij - d) } else { 0.0 };
                let mag = -2000.0 * ((rij - d) / 0.08).exp() - body + cij;
                acc.add([mag * rel[0] / d / mi, mag * rel[1] / d / mi]);
            }
            acc.check(vec2(&case, "a", i), "sfm", i)?;
        }
    }

    #[test]
    fn gravity_matches_oracle(seed in any::<u64>(), n in 2usize..100) {
        let dir = tempfile::tempdir().unwrap();
        let points = random_points(seed, n, 2.5);
        let mut case = planar_case(
            dir.path(),
            &points,
            [2, 2],
            &[("G", "6.674e-3"), ("eps", "0.01")],
            &[("m", "rand(1,2)"), ("a", "0|0")],
            &[("grav", "a=nbody_gravity(m,G,eps)")],
            seed,
        );
        case.solve_step().unwrap();
        let ps = case.particles();
        for i in 0..n {
            let xi = ps.position(i).as_slice();
            let mut acc = Acc::default();
            for j in (0..n).filter(|j| *j != i) {
                let xj = ps.position(j).as_slice();
                let rel = [xj[0] - xi[0], xj[1] - xi[1]];
                let s = 6.674e-3 * sc(&case, "m", j) / (dot(rel, rel) + 1e-4).powf(1.5);
                acc.add([s * rel[0], s * rel[1]]);
            }
            acc.check(vec2(&case, "a", i), "nbody_gravity", i)?;
        }
    }

    #[test]
    fn periodic_translation_leaves_outputs_unchanged(seed in any::<u64>(), n in 2usize..80, sx in -3.0f64..3.0, sy in -3.0f64..3.0) {
        let dir = tempfile::tempdir().unwrap();
        let points = random_points(seed, n, 2.5);
        let shifted: Vec<Vec<f64>> = points
            .iter()
            .map(|p| vec![(p[0] + sx).rem_euclid(2.5), (p[1] + sy).rem_euclid(2.5)])
            .collect();
        let outputs = |pts: &[Vec<f64>]| {
            let sub = tempfile::tempdir_in(dir.path()).unwrap();
            let mut case = planar_case(
                sub.path(),
                pts,
                [0, 0],
                &[("rad", "0.45")],
                &[("A", "rand(-1,1)"), ("v", "rand(-1,1)|rand(-1,1)"), ("g", "0|0"), ("l", "0"), ("av", "0|0")],
                &[
                    ("g", "g=sph_D00(A,1,1,Wp52220,rad)"),
                    ("l", "l=sph_L0(A,1,1,Wp52220,rad)"),
                    ("av", "av=sph_A(v,1,1,Wp52220,rad)"),
                ],
                seed,
            );
            case.solve_step().unwrap();
            ["g", "l", "av"].map(|name| field(&case, name).to_vec())
        };
        let a = outputs(&points);
        let b = outputs(&shifted);
        for (fa, fb) in a.iter().zip(&b) {
            let scale = fa.iter().map(|t| t.norm()).fold(0.0, f64::max);
            for (x, y) in fa.iter().zip(fb) {
                prop_assert!(x.sub(y).unwrap().norm() <= 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn dem_pairwise_momentum(seed in any::<u64>(), n in 2usize..100) {
        // uniform mass, periodic in both axes so no wall contacts
        let dir = tempfile::tempdir().unwrap();
        let points = random_points(seed, n, 2.5);
        let mut case = planar_case(
            dir.path(),
            &points,
            [0, 0],
            &[("cf", "0.3"), ("m", "1.7")],
            &[("v", "rand(-1,1)|rand(-1,1)"), ("a", "0|0")],
            &[("contact", "a=dem_l(v,0.1,2.06e6,0.33,m,cf,0.25)")],
            seed,
        );
        case.solve_step().unwrap();
        let a = field(&case, "a");
        let total = a.iter().fold([0.0, 0.0], |s, t| [s[0] + 1.7 * t.as_slice()[0], s[1] + 1.7 * t.as_slice()[1]]);
        let scale = a.iter().map(|t| 1.7 * t.norm()).fold(0.0, f64::max);
        prop_assert!(total[0].hypot(total[1]) <= 1e-10 * n as f64 * scale.max(1e-300));
    }
}

#[test]
fn zeroth_order_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let points = random_points(9, 80, 2.5);
    for b in [[0, 0], [1, 1], [2, 0]] {
        let mut case = planar_case(
            dir.path(),
            &points,
            b,
            &[("rad", "0.45")],
            &[
                ("A", "3"),
                ("v", "1|-2"),
                ("rho", "rand(900,1100)"),
                ("m", "rand(0.5,1.5)"),
                ("g", "1|1"),
                ("l", "1"),
                ("av", "1|1"),
            ],
            &[
                ("g", "g=sph_D00(A,m,rho,Wp52220,rad)"),
                ("l", "l=sph_L0(A,m,rho,Wp52220,rad)"),
                ("av", "av=sph_A(v,m,rho,Wp52220,rad)"),
            ],
            1,
        );
        case.solve_step().unwrap();
        for name in ["g", "l"] {
            assert!(field(&case, name).iter().all(|t| t.as_slice().iter().all(|v| *v == 0.0)), "{name}");
        }
        // a uniform velocity on a symmetric wall differs from its mirror image
        if b == [0, 0] || b == [2, 0] {
            assert!(field(&case, "av").iter().all(|t| t.norm() == 0.0));
        }
    }
}

#[test]
fn circular_orbit_conserves_energy() {
    // unit masses at unit distance, G = 1: relative speed sqrt(2)
    let dir = tempfile::tempdir().unwrap();
    write_points(dir.path(), "pair.txt", &[vec![4.5, 5.0], vec![5.5, 5.0]]);
    let period = 2.0 * PI / 2f64.sqrt();
    let mut deck = Deck::new("1|1", "0|0", "10|10", "cutoff|cutoff", Grid::File("pair.txt".into()));
    deck.constants = pairs(&[("G", "1"), ("m", "1"), ("ex", "1|0"), ("ey", "0|1")]);
    let dt = format!("{period:?}/10000");
    deck.variables = vec![("dt".into(), dt)];
    deck.fields = pairs(&[("v", "if(dot(r,ex)<5,-ey,ey)*sqrt(0.5)"), ("a", "0|0")]);
    deck.equations = pairs(&[("grav", "a=nbody_gravity(m,G)"), ("vel", "v=euler(v,a,dt)"), ("pos", "r=euler(r,v,dt)")]);
    deck.simulated_time = format!("{period:?}");
    deck.print_interval = format!("{period:?}");
    let mut case = assemble(&deck.text(), dir.path(), 1, 0);
    let energy = |case: &Case| {
        let p = case.particles().positions();
        let v = field(case, "v");
        let kinetic: f64 = v.iter().map(|t| 0.5 * t.norm_squared()).sum();
        kinetic - 1.0 / p[0].sub(&p[1]).unwrap().norm()
    };
    let e0 = energy(&case);
    let mut worst = 0.0f64;
    let report = run_with(&mut case, &RunOptions::default(), |c| {
        worst = worst.max((energy(c) - e0).abs() / e0.abs());
    })
    .unwrap();
    assert_eq!(report.steps, 10_000);
    assert!(worst < 1e-2, "energy drift {worst}");
}
