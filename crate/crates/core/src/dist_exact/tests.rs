use std::collections::BTreeMap;

use num_rational::BigRational;

use super::*;
use crate::groups::{letters_to_word, GroupDescriptor, GroupElement, StepDistribution};

const LN2: f64 = std::f64::consts::LN_2;

fn int(v: i64) -> GroupElement {
    GroupElement::Integer(v)
}

fn vec2(a: i64, b: i64) -> GroupElement {
    GroupElement::Vector([a, b].into_iter().collect())
}

fn z_walk(atoms: &[(i64, f64)]) -> StepDistribution {
    StepDistribution::new(GroupDescriptor::IntegerLine, atoms.iter().map(|&(x, p)| (int(x), p)).collect()).unwrap()
}

fn simple() -> StepDistribution {
    z_walk(&[(-1, 0.5), (1, 0.5)])
}

fn drifted() -> StepDistribution {
    z_walk(&[(-1, 0.7), (1, 0.3)])
}

fn directed() -> StepDistribution {
    StepDistribution::new(GroupDescriptor::IntegerLattice { dim: 2 }, vec![(vec2(1, 0), 0.5), (vec2(0, 1), 0.5)])
        .unwrap()
}

fn free2() -> StepDistribution {
    let w = |s: &str| GroupElement::Word(letters_to_word(s).unwrap());
    StepDistribution::new(
        GroupDescriptor::FreeGroup { rank: 2 },
        vec![(w("a"), 0.25), (w("A"), 0.25), (w("b"), 0.25), (w("B"), 0.25)],
    )
    .unwrap()
}

fn cfg() -> ExactConfig {
    ExactConfig::default()
}

/// Entropy of the law of `(min, max)` and `(min, max, end)` over all
/// `2^n` sign paths of the simple walk.
fn sign_path_oracle(n: u32) -> (f64, f64) {
    let mut r: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    let mut rs: BTreeMap<(i64, i64, i64), f64> = BTreeMap::new();
    let w = 0.5f64.powi(n as i32);
    for bits in 0u64..(1 << n) {
        let (mut pos, mut lo, mut hi) = (0i64, 0i64, 0i64);
        for i in 0..n {
            pos += if bits >> i & 1 == 1 { 1 } else { -1 };
            lo = lo.min(pos);
            hi = hi.max(pos);
        }
        *r.entry((lo, hi)).or_default() += w;
        *rs.entry((lo, hi, pos)).or_default() += w;
    }
    let h = |v: Vec<f64>| v.iter().map(|p| -p * p.ln()).sum::<f64>();
    (h(r.into_values().collect()), h(rs.into_values().collect()))
}

#[test]
fn simple_walk_one_step_law() {
    let law = law_range_endpoint::<f64>(&simple(), 1, &cfg()).unwrap();
    let e = GroupDescriptor::IntegerLine.enumeration();
    let k1 = range_key(&e, &[int(0), int(1)], Some(&int(1))).unwrap();
    let k2 = range_key(&e, &[int(-1), int(0)], Some(&int(-1))).unwrap();
    assert_eq!(law.len(), 2);
    assert_eq!(law.get(&k1), Some(&0.5));
    assert_eq!(law.get(&k2), Some(&0.5));
}

#[test]
fn simple_walk_three_step_range_entropy() {
    let h = entropy(&law_range::<f64>(&simple(), 3, &cfg()).unwrap());
    let expected = 0.75 * 8f64.ln() + 0.25 * 4f64.ln();
    assert!((h - expected).abs() < 1e-12);
    assert!((h - 1.906155).abs() < 1e-6);
    assert!((h - sign_path_oracle(3).0).abs() < 1e-12);
}

#[test]
fn simple_walk_matches_sign_path_oracle() {
    let seq = entropy_sequence(&simple(), 14, &[EntropyTarget::Range, EntropyTarget::RangeEndpoint], &cfg()).unwrap();
    for n in 0..=14 {
        let (hr, hrs) = sign_path_oracle(n as u32);
        assert!((seq.range.as_ref().unwrap()[n] - hr).abs() < 1e-12, "n={n}");
        assert!((seq.range_endpoint.as_ref().unwrap()[n] - hrs).abs() < 1e-12, "n={n}");
    }
}

#[test]
fn directed_lattice_range_entropy() {
    let mu = directed();
    let law = law_range_endpoint::<f64>(&mu, 5, &cfg()).unwrap();
    assert!((law.entropy() - 5.0 * LN2).abs() < 1e-12);
    assert!((law.drop_endpoint().entropy() - 5.0 * LN2).abs() < 1e-12);
}

#[test]
fn trace_law_small_cases() {
    let l0 = law_trace::<f64>(&free2(), 0, false, &cfg()).unwrap();
    assert_eq!(l0.len(), 1);
    assert_eq!(l0.entropy(), 0.0);

    let l2 = law_trace::<f64>(&simple(), 2, false, &cfg()).unwrap();
    assert_eq!(l2.len(), 4);
    assert!((l2.entropy() - 4f64.ln()).abs() < 1e-12);

    let l4 = law_trace::<f64>(&directed(), 4, false, &cfg()).unwrap();
    assert_eq!(l4.len(), 16);
    assert!((l4.entropy() - 4.0 * LN2).abs() < 1e-12);
}

#[test]
fn entropy_examples() {
    let table = |ps: &[f64]| {
        LawTable::from_map(ps.iter().enumerate().map(|(i, &p)| (vec![i as u8], p)).collect::<BTreeMap<_, _>>())
    };
    assert!((entropy(&table(&[0.25; 4])) - 4f64.ln()).abs() < 1e-15);
    let h = entropy(&table(&[0.75, 0.25]));
    assert!((h - (-0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln())).abs() < 1e-15);
    assert!((h - 0.562335).abs() < 1e-6);
    assert_eq!(entropy(&table(&[1.0])), 0.0);
}

#[test]
fn directed_lattice_sequence_is_linear() {
    let seq = entropy_sequence(&directed(), 10, &EntropyTarget::ALL, &cfg()).unwrap();
    let rs = seq.range_endpoint.as_ref().unwrap();
    for n in 1..=10 {
        assert!((rs[n] / n as f64 - LN2).abs() < 1e-12);
    }
    assert!((seq.h_proxy().unwrap() - LN2).abs() < 1e-12);
    assert!(check_subadditivity(&seq, 1e-9).holds());
    assert!(seq.invariant_violations(1e-9).is_empty());
}

#[test]
fn simple_walk_rate_decreases() {
    let seq = entropy_sequence(&simple(), 12, &[EntropyTarget::RangeEndpoint], &cfg()).unwrap();
    let rs = seq.range_endpoint.unwrap();
    assert!(rs[12] / 12.0 < rs[6] / 6.0);
    // two-step equality: four equiprobable outcomes
    assert!((rs[2] - 4f64.ln()).abs() < 1e-12);
    assert!((rs[2] - 2.0 * rs[1]).abs() < 1e-12);
}

#[test]
fn zero_horizon_sequence() {
    let seq = entropy_sequence(&free2(), 0, &EntropyTarget::ALL, &cfg()).unwrap();
    for t in EntropyTarget::ALL {
        assert_eq!(seq.track(t).unwrap(), &[0.0]);
    }
    assert_eq!(seq.h_proxy(), None);
}

#[test]
fn log_moment_examples() {
    let (lhs, rhs) = log_moment_bound(&[0.5, 0.5], 1.0).unwrap();
    assert!((lhs - LN2).abs() < 1e-15);
    assert_eq!(rhs, 1.0);
    let (lhs, rhs) = log_moment_bound(&[1.0], 2.0).unwrap();
    assert_eq!(lhs, 0.0);
    assert!(rhs >= 0.0);
    assert!(log_moment_bound(&[0.5, 0.5], 0.5).is_err());
    assert!(log_moment_bound(&[0.5, 0.4], 1.0).is_err());
    assert!(log_moment_bound(&[1.5, -0.5], 1.0).is_err());
}

#[test]
fn conditional_endpoint_examples() {
    for n in 0..=8 {
        let r = conditional_endpoint_diagnostics(&directed(), n, &cfg()).unwrap();
        assert!(r.endpoint_given_range.abs() < 1e-12);
        assert!(r.holds);
    }
    let r = conditional_endpoint_diagnostics(&simple(), 2, &cfg()).unwrap();
    assert!(r.endpoint_given_range.abs() < 1e-12);
    let r = conditional_endpoint_diagnostics(&simple(), 0, &cfg()).unwrap();
    assert_eq!((r.endpoint_given_range, r.max_log_square_moment), (0.0, 0.0));
    for n in 1..=10 {
        let r = conditional_endpoint_diagnostics(&drifted(), n, &cfg()).unwrap();
        assert!(r.holds, "{r:?}");
        let seq = entropy_sequence(&drifted(), n, &[EntropyTarget::Range, EntropyTarget::RangeEndpoint], &cfg()).unwrap();
        let diff = seq.range_endpoint.unwrap()[n] - seq.range.unwrap()[n];
        assert!((diff - r.endpoint_given_range).abs() < 1e-10);
    }
}

#[test]
fn boundary_bound_examples() {
    for n in 0..=10 {
        let r = boundary_lower_bound(&directed(), n, &vec2(1, 0), &cfg()).unwrap();
        assert!(r.holds);
        assert!(r.expected_boundary >= 1.0 - 1e-12);
        assert!((r.range_entropy - n as f64 * LN2).abs() < 1e-10);
    }
    let r = boundary_lower_bound(&simple(), 0, &int(1), &cfg()).unwrap();
    assert_eq!((r.expected_boundary, r.bound, r.range_entropy), (1.0, 0.0, 0.0));
    let r = boundary_lower_bound(&drifted(), 8, &int(-1), &cfg()).unwrap();
    assert!(r.range_entropy > r.bound + 1e-3, "{r:?}");
    assert!(boundary_lower_bound(&drifted(), 3, &int(2), &cfg()).is_err());
    assert!(boundary_lower_bound(&drifted(), 3, &int(0), &cfg()).is_err());
}

#[test]
fn aep_examples() {
    use crate::stream::RngStreamSpec;
    use crate::walk::sample_trajectory;
    let mu = directed();
    let law = law_range_endpoint::<f64>(&mu, 9, &cfg()).unwrap();
    let trajs: Vec<_> = (0..20).map(|i| sample_trajectory(&mu, 9, RngStreamSpec::new(5, i))).collect();
    let rep = aep_samples(&mu, 9, &law, &trajs).unwrap();
    assert!(rep.values.iter().all(|v| (v - LN2).abs() < 1e-12));

    let mu = simple();
    let law = law_range_endpoint::<f64>(&mu, 2, &cfg()).unwrap();
    let trajs: Vec<_> = (0..20).map(|i| sample_trajectory(&mu, 2, RngStreamSpec::new(6, i))).collect();
    let rep = aep_samples(&mu, 2, &law, &trajs).unwrap();
    assert!(rep.values.iter().all(|v| (v - LN2).abs() < 1e-12));
    assert!(rep.variance < 1e-20);

    let law = law_range_endpoint::<f64>(&mu, 0, &cfg()).unwrap();
    let t0 = sample_trajectory(&mu, 0, RngStreamSpec::new(1, 0));
    assert_eq!(aep_samples(&mu, 0, &law, &[t0]).unwrap().values, vec![0.0]);

    let t3 = sample_trajectory(&mu, 3, RngStreamSpec::new(1, 0));
    assert!(aep_samples(&mu, 2, &law_range_endpoint::<f64>(&mu, 2, &cfg()).unwrap(), &[t3]).is_err());
}

#[test]
fn reversal_laws_agree() {
    for n in 0..=8 {
        assert!(reversal_law_check(&simple(), n, &cfg()).unwrap() <= 1e-12);
        assert!(reversal_law_check(&drifted(), n, &cfg()).unwrap() <= 1e-12);
    }
    let lazy_jump = z_walk(&[(-1, 0.5), (0, 0.2), (2, 0.3)]);
    for n in 0..=6 {
        assert!(reversal_law_check(&lazy_jump, n, &cfg()).unwrap() <= 1e-12);
        assert!(reversal_law_check(&free2(), n, &cfg()).unwrap() <= 1e-12);
    }
}

fn assert_laws_equal(a: &LawTable<f64>, b: &LawTable<f64>) {
    assert_eq!(a.len(), b.len());
    for (k, p) in a.iter() {
        let q = b.get(k).expect("outcome present in both laws");
        assert!((p - q).abs() <= 1e-14 * p.max(1e-300) + 1e-17, "{p} vs {q}");
    }
}

fn mixed_measures() -> Vec<StepDistribution> {
    let cyc = StepDistribution::new(
        GroupDescriptor::FiniteCyclicProduct { moduli: [3, 2].into_iter().collect() },
        vec![
            (GroupElement::Residues([1, 0].into_iter().collect()), 0.5),
            (GroupElement::Residues([0, 1].into_iter().collect()), 0.5),
        ],
    )
    .unwrap();
    let lattice = StepDistribution::new(
        GroupDescriptor::IntegerLattice { dim: 2 },
        vec![(vec2(1, 0), 0.4), (vec2(-1, 0), 0.1), (vec2(0, 1), 0.3), (vec2(0, -1), 0.2)],
    )
    .unwrap();
    vec![simple(), drifted(), z_walk(&[(-1, 0.5), (0, 0.2), (2, 0.3)]), directed(), lattice, free2(), cyc]
}

#[test]
fn dp_matches_path_enumeration() {
    for mu in mixed_measures() {
        let nmax = if mu.len() > 2 { 6 } else { 8 };
        for n in 0..=nmax {
            let dp = law_range_endpoint::<f64>(&mu, n, &cfg()).unwrap();
            let brute = path_range_law::<f64>(&mu, n, &cfg()).unwrap();
            assert_laws_equal(&dp, &brute);
            dp.validate().unwrap();
        }
    }
}

#[test]
fn trace_engines_agree() {
    for mu in mixed_measures() {
        let nmax = if mu.len() > 2 { 6 } else { 8 };
        for n in 0..=nmax {
            for with_end in [false, true] {
                let fast = law_trace::<f64>(&mu, n, with_end, &cfg()).unwrap();
                let brute = path_trace_law::<f64>(&mu, n, with_end, &cfg()).unwrap();
                assert_laws_equal(&fast, &brute);
                fast.validate().unwrap();
            }
            let seq = entropy_sequence(&mu, n, &[EntropyTarget::Trace, EntropyTarget::TraceEndpoint], &cfg()).unwrap();
            let hg = law_trace::<f64>(&mu, n, false, &cfg()).unwrap().entropy();
            let hgs = law_trace::<f64>(&mu, n, true, &cfg()).unwrap().entropy();
            assert!((seq.trace.as_ref().unwrap()[n] - hg).abs() < 1e-12);
            assert!((seq.trace_endpoint.as_ref().unwrap()[n] - hgs).abs() < 1e-12);
            // the digraph determines its endpoint
            assert!((hg - hgs).abs() < 1e-12);
        }
    }
}

#[test]
fn rational_mode_has_exact_mass() {
    for mu in mixed_measures() {
        let law = law_range_endpoint::<BigRational>(&mu, 5, &cfg()).unwrap();
        assert_eq!(law.total_mass(), BigRational::from_integer(1.into()));
        law.validate().unwrap();
        let fl = law_range_endpoint::<f64>(&mu, 5, &cfg()).unwrap();
        assert!((law.entropy() - fl.entropy()).abs() < 1e-12);
        let tr = law_trace::<BigRational>(&mu, 4, true, &cfg()).unwrap();
        assert_eq!(tr.total_mass(), BigRational::from_integer(1.into()));
    }
    let cfg_r = ExactConfig { arithmetic: Arithmetic::Rational, ..cfg() };
    let a = entropy_sequence(&free2(), 5, &EntropyTarget::ALL, &cfg_r).unwrap();
    let b = entropy_sequence(&free2(), 5, &EntropyTarget::ALL, &cfg()).unwrap();
    for t in EntropyTarget::ALL {
        for (x, y) in a.track(t).unwrap().iter().zip(b.track(t).unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn irrational_masses_refuse_rational_mode() {
    let mu = z_walk(&[(-1, 1.0 / 3.0), (1, 2.0 / 3.0)]);
    let r = law_range_endpoint::<BigRational>(&mu, 2, &cfg());
    assert!(matches!(r, Err(ExactError::NotRational)));
}

#[test]
fn resource_cap_is_reported() {
    let small = ExactConfig { max_states: 50, ..cfg() };
    let err = entropy_sequence(&free2(), 6, &EntropyTarget::ALL, &small).unwrap_err();
    assert!(matches!(err, ExactError::Resource { limit: 50, .. }), "{err}");
    assert!(err.to_string().contains("50"));
    let few_paths = ExactConfig { max_paths: 100, ..cfg() };
    assert!(matches!(
        law_trace::<f64>(&free2(), 4, false, &few_paths),
        Err(ExactError::Resource { limit: 100, .. })
    ));
}

#[test]
fn csv_exports() {
    let law = law_range_endpoint::<f64>(&simple(), 1, &cfg()).unwrap();
    let mut buf = Vec::new();
    law.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("key_hex,probability\n"));
    let seq = entropy_sequence(&simple(), 2, &[EntropyTarget::RangeEndpoint], &cfg()).unwrap();
    let mut buf = Vec::new();
    seq.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("n,H_R,H_RS,H_G,H_GS"));
    assert_eq!(text.lines().nth(1), Some("0,,0.000000000000,,"));
}

#[test]
fn codec_keys_transport_structural_law() {
    for mu in [simple(), drifted(), directed(), free2()] {
        for with_end in [false, true] {
            let r = trace_key_transport::<BigRational>(&mu, 7, with_end, &cfg()).unwrap();
            assert!(r.holds(), "{r:?}");
            assert!((r.h_structural - r.h_codec).abs() < 1e-12);
        }
    }
}
