//! Frozen reference values. Each value is recomputed here by an oracle that
//! does not go through the library (hand-rolled arithmetic, brute force or
//! a counting argument) and then compared with both the frozen constant and
//! the library.

use std::collections::BTreeMap;

use dlstrata::charts::{self, ChartSpec};
use dlstrata::gf::{FieldCtx, Modulus};
use dlstrata::latcalc::{self, HermSpace, TruncRing};
use dlstrata::linalg::{rank, Mat};
use dlstrata::space::{enumerate_subspaces, gaussian_binomial, FormKind, FormedSpace};
use dlstrata::strata::{Kind, Sign, StrataConfig, StrataCtx, StratumLabel, DEFAULT_BUDGET};
use dlstrata::weyl::{BasisVec, DlFamily, DlSetting, Variant, WeylCtx, WeylType};

// ---------------------------------------------------------------------------
// Hand-rolled arithmetic for the oracles
// ---------------------------------------------------------------------------

/// `GF(9) = F_3[i]/(i² + 1)` as pairs `(a, b) = a + b·i`.
type G9 = (u32, u32);

fn g9_mul(x: G9, y: G9) -> G9 {
    ((x.0 * y.0 + 2 * x.1 * y.1) % 3, (x.0 * y.1 + x.1 * y.0) % 3)
}

fn g9_pow(x: G9, n: u32) -> G9 {
    (0..n).fold((1, 0), |acc, _| g9_mul(acc, x))
}

/// Rank of a matrix over `F_p` by naive elimination.
fn rank_mod_p(mut rows: Vec<Vec<i64>>, p: i64) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][c].rem_euclid(p) != 0) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = (1..p).find(|x| (x * rows[r][c]).rem_euclid(p) == 1).expect("prime modulus");
        for i in 0..rows.len() {
            if i != r {
                let f = (rows[i][c] * inv).rem_euclid(p);
                let pivot = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x = (*x - f * y).rem_euclid(p);
                }
            }
        }
        r += 1;
    }
    r
}

fn all_vectors(n: usize, p: i64) -> Vec<Vec<i64>> {
    (0..p.pow(n as u32))
        .map(|mut x| {
            (0..n)
                .map(|_| {
                    let d = x % p;
                    x /= p;
                    d
                })
                .collect()
        })
        .collect()
}

/// Number of `d`-dimensional subspaces of `F_p^n` satisfying `pred` on a
/// basis, by counting ordered bases and dividing by `|GL_d(F_p)|`.
fn brute_subspaces(n: usize, d: usize, p: i64, pred: &dyn Fn(&[Vec<i64>]) -> bool) -> u64 {
    let vs = all_vectors(n, p);
    let mut ordered = 0u64;
    let mut basis: Vec<Vec<i64>> = Vec::new();
    fn rec(vs: &[Vec<i64>], d: usize, p: i64, basis: &mut Vec<Vec<i64>>, pred: &dyn Fn(&[Vec<i64>]) -> bool, out: &mut u64) {
        if basis.len() == d {
            if pred(basis) {
                *out += 1;
            }
            return;
        }
        for v in vs {
            basis.push(v.clone());
            if rank_mod_p(basis.clone(), p) == basis.len() {
                rec(vs, d, p, basis, pred, out);
            }
            basis.pop();
        }
    }
    rec(&vs, d, p, &mut basis, pred, &mut ordered);
    let gl: u64 = (0..d as u32).map(|i| (p.pow(d as u32) - p.pow(i)) as u64).product();
    ordered / gl
}

fn counts(cfg: StrataConfig) -> BTreeMap<String, u64> {
    let ctx = StrataCtx::new(cfg).expect("valid configuration");
    ctx.stratum_counts(DEFAULT_BUDGET).expect("within budget").into_iter().map(|(l, c)| (l.to_string(), c)).collect()
}

fn frozen(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(l, c)| (l.to_string(), *c)).collect()
}

// ---------------------------------------------------------------------------
// Finite fields
// ---------------------------------------------------------------------------

#[test]
fn gf9_from_explicit_modulus() {
    // x² + 1 has no root in F_3.
    assert!((0..3u32).all(|x| (x * x + 1) % 3 != 0));
    let f = FieldCtx::new(3, 1, 2, Modulus::Explicit(vec![1, 0, 1])).expect("irreducible modulus");
    assert_eq!(f.size(), 9);
    assert_eq!(f.q(), 3);
}

#[test]
fn gf9_inverse_is_seventh_power() {
    let f = FieldCtx::new(3, 1, 2, Modulus::Explicit(vec![1, 0, 1])).unwrap();
    let pair = |c: dlstrata::gf::Code| -> G9 {
        let v = f.coeffs(c);
        (v[0], v.get(1).copied().unwrap_or(0))
    };
    // Oracle: the multiplicative order of every element divides 8, so
    // x⁻¹ = x⁷; a generator has order exactly 8.
    let mut generators = 0;
    for c in 1..9 {
        let x = pair(c);
        assert_eq!(g9_mul(x, g9_pow(x, 7)), (1, 0));
        assert_eq!(pair(f.inv(c).unwrap()), g9_pow(x, 7));
        assert_eq!(pair(f.pow(c, 7)), g9_pow(x, 7));
        if (1..8).all(|k| g9_pow(x, k) != (1, 0)) {
            generators += 1;
        }
    }
    assert_eq!(generators, 4);
    let g = f.generator();
    assert!((1..8).all(|k| f.pow(g, k) != f.one()));
}

#[test]
fn gf9_root_of_minus_one_cubes_to_its_negative() {
    let f = FieldCtx::new(3, 1, 2, Modulus::Explicit(vec![1, 0, 1])).unwrap();
    let i = f.from_coeffs(&[0, 1]).unwrap();
    assert_eq!(g9_pow((0, 1), 3), (0, 2));
    assert_eq!(f.pow(i, 3), f.neg(i));
    assert_eq!(f.frob(i), f.neg(i));
}

// ---------------------------------------------------------------------------
// Subspace counting
// ---------------------------------------------------------------------------

#[test]
fn planes_in_f3_4() {
    const FROZEN: u64 = 130;
    assert_eq!(brute_subspaces(4, 2, 3, &|_| true), FROZEN);
    assert_eq!(gaussian_binomial(4, 2, 3), FROZEN as u128);
    let f = FieldCtx::auto(3, 1, 1).unwrap();
    let v = FormedSpace::build(&f, FormKind::None, 4).unwrap();
    assert_eq!(enumerate_subspaces(&v, 2, 1, false, DEFAULT_BUDGET).unwrap().len() as u64, FROZEN);
}

#[test]
fn lagrangians_of_symplectic_f3_4() {
    const FROZEN: u64 = 40;
    // Any non-degenerate alternating form; the count is basis independent.
    let omega = |x: &[i64], y: &[i64]| (x[0] * y[2] + x[1] * y[3] - x[2] * y[0] - x[3] * y[1]).rem_euclid(3);
    assert_eq!(brute_subspaces(4, 2, 3, &|b| omega(&b[0], &b[1]) == 0), FROZEN);
    assert_eq!((3 + 1) * (9 + 1), FROZEN);
    let f = FieldCtx::auto(3, 1, 1).unwrap();
    let v = FormedSpace::build(&f, FormKind::Symplectic, 4).unwrap();
    assert_eq!(enumerate_subspaces(&v, 2, 1, true, DEFAULT_BUDGET).unwrap().len() as u64, FROZEN);
}

#[test]
fn isotropic_lines_of_nonsplit_quadric() {
    // Non-split 4-dimensional quadratic space over F_3: a hyperbolic plane
    // plus the anisotropic x² + y² (−1 is a non-square mod 3). It has
    // q² + 1 = 10 isotropic lines (an elliptic quadric).
    let q = |x: &[i64]| (x[0] * x[3] + x[1] * x[1] + x[2] * x[2]).rem_euclid(3);
    let lines = brute_subspaces(4, 1, 3, &|b| q(&b[0]) == 0);
    assert_eq!(lines, 10);
    let f = FieldCtx::auto(3, 1, 2).unwrap();
    let v = FormedSpace::build(&f, FormKind::SymmetricEvenNonsplit, 4).unwrap();
    let rational = dlstrata::space::enumerate_rational_subspaces(&v, 1, true, DEFAULT_BUDGET).unwrap();
    assert_eq!(rational.len() as u64, lines);
}

// ---------------------------------------------------------------------------
// Strata point counts
// ---------------------------------------------------------------------------

#[test]
fn symplectic_t4_h0_level_one_is_all_rational() {
    // Every F_3-point is Φ-stable: all 40 Lagrangians carry id(0,0).
    assert_eq!(counts(StrataConfig::z(4, 0, 3, 1)), frozen(&[("id(0,0)", 40)]));
}

#[test]
fn symplectic_t4_h0_level_two() {
    let (q, big_q) = (3u64, 9u64);
    // Oracle: a non-rational member L meets ΦL in the rational line
    // L ∩ ΦL; Lagrangians through a line ℓ are the lines of the 2-dim
    // symplectic space ℓ⊥/ℓ, of which q + 1 are rational.
    let rational_lines = (q.pow(4) - 1) / (q - 1);
    let id = (q + 1) * (q * q + 1);
    let w = rational_lines * ((big_q + 1) - (q + 1));
    assert_eq!((id, w), (40, 240));
    assert_eq!(counts(StrataConfig::z(4, 0, 3, 2)), frozen(&[("id(0,0)", 40), ("w(1,0)", 240)]));
}

#[test]
fn symplectic_t6_h2_level_two() {
    let (q, big_q) = (3u64, 9u64);
    let lines = |n: u32, q: u64| (q.pow(n) - 1) / (q - 1);
    // Rational isotropic planes of F_3^6.
    let id = (q.pow(6) - 1) * (q.pow(4) - 1) / ((q * q - 1) * (q - 1));
    // wprime(2,0): U between a rational line ℓ and a rational Lagrangian W,
    // i.e. a non-rational line of the plane W/ℓ.
    let lagrangians = (q + 1) * (q * q + 1) * (q.pow(3) + 1);
    let wprime = lagrangians * lines(3, q) * ((big_q + 1) - (q + 1));
    // All non-rational members: a rational line ℓ and a non-rational
    // line in the 4-dim symplectic ℓ⊥/ℓ (all lines are isotropic).
    let non_rational = lines(6, q) * (lines(4, big_q) - lines(4, q));
    let w = non_rational - wprime;
    assert_eq!((id, wprime, w), (3640, 87360, 196560));
    assert_eq!(
        counts(StrataConfig::z(6, 2, 3, 2)),
        frozen(&[("id(1,1)", 3640), ("wprime(2,0)", 87360), ("w(2,1)", 196560)])
    );
}

#[test]
fn orthogonal_h_equals_n_has_two_balanced_sign_classes() {
    // n = 6, h = 6, t = 2: Lagrangians of a 4-dim quadric that is non-split
    // over F_3 and split over F_9: 2(Q + 1) = 20 of them, none rational,
    // and Φ swaps the two rulings.
    let big_q = 9u64;
    assert_eq!(2 * (big_q + 1), 20);
    assert_eq!(counts(StrataConfig::y(6, 6, 2, false, 3, 2)), frozen(&[("w(1,0)+", 10), ("w(1,0)-", 10)]));
    for k in 1..=2 {
        let c = counts(StrataConfig::y(6, 6, 2, false, 3, k));
        let (plus, minus): (u64, u64) = c.iter().fold((0, 0), |(p, m), (l, n)| {
            let l: StratumLabel = l.parse().unwrap();
            assert_eq!(l.kind, Kind::W);
            match l.sign {
                Sign::Plus => (p + n, m),
                Sign::Minus => (p, m + n),
                Sign::Na => panic!("unsigned label {l}"),
            }
        });
        assert_eq!(plus, minus, "level {k}");
    }
}

#[test]
fn linear_t6_h4_t2() {
    // Members are the points of P¹ over GF(q^k): rational ones carry
    // w(2,2), the others w(3,1).
    let q = 3u64;
    for (k, frozen_counts) in [(2u32, [4u64, 6]), (3, [4, 24])] {
        let oracle = [q + 1, (q.pow(k) + 1) - (q + 1)];
        assert_eq!(oracle, frozen_counts);
        assert_eq!(
            counts(StrataConfig::zy(6, 4, 2, 3, k)),
            frozen(&[("w(2,2)", frozen_counts[0]), ("w(3,1)", frozen_counts[1])])
        );
    }
    // The literal four-element index set contains two labels that never
    // occur.
    let ctx = StrataCtx::new(StrataConfig::zy(6, 4, 2, 3, 2)).unwrap();
    let literal: Vec<String> = ctx.literal_linear_labels().iter().map(|l| l.to_string()).collect();
    assert_eq!(literal, ["w(2,1)", "w(2,2)", "w(3,1)", "w(3,2)"]);
}

// ---------------------------------------------------------------------------
// Weyl groups
// ---------------------------------------------------------------------------

#[test]
fn g_i_swaps_one_hyperbolic_pair() {
    let c3 = WeylCtx::new(WeylType::C, 3, false).unwrap();
    for i in 1..=3usize {
        let word: Vec<usize> = (i..=3).chain((i..3).rev()).collect();
        let g = c3.from_word(&word).unwrap();
        for j in 1..=3 {
            let (e, f) = (g.act(BasisVec::E(j)).unwrap().1, g.act(BasisVec::F(j)).unwrap().1);
            if j == i {
                assert_eq!((e, f), (BasisVec::F(j), BasisVec::E(j)));
            } else {
                assert_eq!((e, f), (BasisVec::E(j), BasisVec::F(j)));
            }
        }
    }
}

#[test]
fn top_symplectic_word_has_length_t_plus_h() {
    for (d, h) in [(2usize, 1usize), (3, 1), (3, 2), (4, 2)] {
        let st = DlSetting::new(DlFamily::Symplectic, d, h).unwrap();
        assert_eq!(st.w(d, h, Variant::Plus).unwrap().length(), d + h);
    }
}

#[test]
fn longest_element_lengths_by_enumeration() {
    // Oracle: the longest element of C_n has length n², of B_n as well,
    // of D_n n(n−1); compare with exhaustive enumeration.
    for n in 1..=3usize {
        let c = WeylCtx::new(WeylType::C, n, false).unwrap();
        let all = c.all_elements();
        assert_eq!(all.len(), (1..=n).product::<usize>() * 2usize.pow(n as u32));
        assert_eq!(all.iter().map(|(_, l)| *l).max(), Some(n * n));
    }
    let d3 = WeylCtx::new(WeylType::D, 3, false).unwrap();
    assert_eq!(d3.all_elements().iter().map(|(_, l)| *l).max(), Some(6));
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

fn brute_rank1(a: usize, b: usize, p: i64, constraint: &dyn Fn(&[i64]) -> bool) -> u64 {
    all_vectors(a * b, p)
        .into_iter()
        .filter(|m| constraint(m))
        .filter(|m| rank_mod_p(m.chunks(b).map(|r| r.to_vec()).collect(), p) <= 1)
        .count() as u64
}

#[test]
fn rank_one_counts() {
    for (a, b, frozen_count) in [(2usize, 3usize, 105u64), (2, 2, 33), (1, 3, 27), (3, 3, 1 + 26 * 26 / 2)] {
        assert_eq!(brute_rank1(a, b, 3, &|_| true), frozen_count, "{a}×{b}");
        assert_eq!(charts::rank1_closed_form(a, b, 3), frozen_count as u128);
    }
}

#[test]
fn linear_chart_2x2() {
    let spec = ChartSpec::zy(8, 4, 8, 0, 3);
    assert_eq!(spec.shape().unwrap().entries(), 4);
    assert_eq!(charts::chart_count(&spec, 1_000_000).unwrap(), 33);
}

#[test]
fn symplectic_chart_with_symmetric_block() {
    // 2 × 4 of rank ≤ 1 whose trailing 2 × 2 block X satisfies X = H Xᵀ H
    // (H antidiagonal), i.e. X = [[a, b], [c, a]]. Oracle: a nonzero u wᵀ
    // satisfies one linear condition u₀w₂ = u₁w₃ on w, so there are
    // 8 · 26 / 2 nonzero matrices, plus zero.
    const FROZEN: u64 = 105;
    assert_eq!(8 * 26 / 2 + 1, FROZEN);
    let constraint = |m: &[i64]| {
        let x = [[m[2], m[3]], [m[6], m[7]]];
        let hxth = [[x[1][1], x[0][1]], [x[1][0], x[0][0]]];
        x == hxth
    };
    assert_eq!(brute_rank1(2, 4, 3, &constraint), FROZEN);
    let spec = ChartSpec::z(6, 2, 6, 3);
    assert_eq!(charts::chart_count(&spec, 1_000_000).unwrap(), FROZEN as u128);
    // u, v, λ up to the scaling of u: 2 + 2 + 1 − 1.
    assert_eq!(spec.stratum_dimension().unwrap(), 4);
    assert_eq!(spec.shape().unwrap().dimension(), 4);
}

// ---------------------------------------------------------------------------
// Lattices
// ---------------------------------------------------------------------------

fn standard_space(n: usize) -> std::sync::Arc<HermSpace> {
    let ring = TruncRing::new(3, 1, 1, 4).unwrap();
    HermSpace::standard(&ring, Mat::identity(n)).unwrap()
}

#[test]
fn vertex_types_below_self_dual_lattice() {
    // Lattices πL₀ ⊆ Λ ⊆ L₀ in rank 4: Λ is a vertex lattice iff its image
    // W ⊆ κ⁴ contains W⊥, and then t(Λ) = 2·codim W ∈ {0, 2, 4}.
    let sp = standard_space(4);
    let top = sp.standard_lattice();
    let bot = top.pi_mul().unwrap();
    let mut types = BTreeMap::new();
    let all = latcalc::enumerate_between(&bot, &top, 1_000_000, &mut |_| Ok(true)).unwrap();
    // All subspaces of κ⁴: 1 + 40 + 130 + 40 + 1.
    assert_eq!(all.len(), 212);
    for l in &all {
        if let Some(t) = l.vertex_type().unwrap() {
            *types.entry(t).or_insert(0u32) += 1;
        }
    }
    // Oracle: the sum of four squares is split over F_3 (discriminant 1,
    // dimension 4), so W ⊇ W⊥ leaves W = κ⁴ (type 0), W = ℓ⊥ for one of
    // the (q + 1)² = 16 isotropic lines (type 2), or one of the 2(q + 1) = 8
    // Lagrangian planes (type 4).
    let iso_lines = brute_subspaces(4, 1, 3, &|b| b[0].iter().map(|x| x * x).sum::<i64>() % 3 == 0);
    let iso_planes = brute_subspaces(4, 2, 3, &|b| {
        let dot = |x: &[i64], y: &[i64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<i64>().rem_euclid(3);
        dot(&b[0], &b[0]) == 0 && dot(&b[1], &b[1]) == 0 && dot(&b[0], &b[1]) == 0
    });
    assert_eq!((iso_lines, iso_planes), (16, 8));
    assert_eq!(types, [(0usize, 1u32), (2, 16), (4, 8)].into_iter().collect());
}

#[test]
fn type_two_lattice_in_rank_four_has_rank_two_residue_forms() {
    let sp = standard_space(4);
    let top = sp.standard_lattice();
    let bot = top.pi_mul().unwrap();
    let lam = latcalc::enumerate_between(&bot, &top, 1_000_000, &mut |l| Ok(l.vertex_type()? == Some(2)))
        .unwrap()
        .into_iter()
        .next()
        .expect("a type-2 lattice");
    let forms = latcalc::induced_forms(&lam).unwrap();
    let f = sp.ctx();
    assert_eq!((forms.symplectic_gram.rows, rank(f, &forms.symplectic_gram)), (2, 2));
    assert_eq!((forms.symmetric_gram.rows, rank(f, &forms.symmetric_gram)), (2, 2));
}

#[test]
fn rank_two_lattices_below_anisotropic_self_dual_lattice() {
    // n = 2 with the standard form: the lattices between πL₀ and L₀
    // correspond to all subspaces of κ², 1 + (q + 1) + 1 = 6 for q = 3.
    // The residue form x² + y² is anisotropic over F_3, so the only vertex
    // lattice among them is L₀ itself.
    assert!((0..3i64).all(|x| (0..3i64).all(|y| (x, y) == (0, 0) || (x * x + y * y) % 3 != 0)));
    let sp = standard_space(2);
    let top = sp.standard_lattice();
    let bot = top.pi_mul().unwrap();
    let all = latcalc::enumerate_between(&bot, &top, 1_000_000, &mut |_| Ok(true)).unwrap();
    assert_eq!(all.len(), 6);
    let vertex: Vec<_> = all.iter().filter_map(|l| l.vertex_type().unwrap()).collect();
    assert_eq!(vertex, [0]);
    assert_eq!(top.dual().unwrap(), top);
}
