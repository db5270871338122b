//! Brute-force laws over all `|supp mu|^n` step sequences, keyed by the
//! canonical outcome encodings. Used as the reference for the faster engines.

use std::collections::BTreeMap;

use crate::groups::{GroupElement, StepDistribution};
use crate::trace_codec;
use crate::walk::{range_of, trace_of, Trajectory};

use super::prob::Probability;
use super::{par_map, range_key, ExactConfig, ExactError, LawTable};

fn enumerate<P, F>(mu: &StepDistribution, n: usize, config: &ExactConfig, key_of: F) -> Result<LawTable<P>, ExactError>
where
    P: Probability,
    F: Fn(&Trajectory) -> Result<Vec<u8>, ExactError> + Sync,
{
    let k = mu.len();
    if (k as f64).powi(n as i32) > config.max_paths as f64 {
        return Err(ExactError::Resource { what: "enumerated paths", limit: config.max_paths });
    }
    let masses = P::step_masses(mu)?;
    let atoms: Vec<GroupElement> = mu.elements().cloned().collect();
    let group = mu.group();
    if n == 0 {
        let t = Trajectory::from_steps(group, Vec::new())?;
        return Ok(LawTable::from_map(BTreeMap::from([(key_of(&t)?, P::one())])));
    }
    let prefixes: Vec<usize> = (0..k).collect();
    let parts = par_map(&prefixes, |&first| {
        let mut part: BTreeMap<Vec<u8>, P> = BTreeMap::new();
        let mut digits = vec![0usize; n - 1];
        loop {
            let mut steps = Vec::with_capacity(n);
            steps.push(atoms[first].clone());
            let mut p = masses[first].clone();
            for &d in &digits {
                steps.push(atoms[d].clone());
                p = p.mul(&masses[d]);
            }
            let t = Trajectory::from_steps(group, steps)?;
            let key = key_of(&t)?;
            match part.get_mut(&key) {
                Some(acc) => acc.add_assign(&p),
                None => {
                    part.insert(key, p);
                }
            }
            if part.len() > config.max_states {
                return Err(ExactError::Resource { what: "path-law outcomes", limit: config.max_states });
            }
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return Ok(part);
                }
                digits[i] += 1;
                if digits[i] < k {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    })?;
    let mut entries: BTreeMap<Vec<u8>, P> = BTreeMap::new();
    for part in parts {
        for (key, p) in part {
            match entries.get_mut(&key) {
                Some(acc) => acc.add_assign(&p),
                None => {
                    entries.insert(key, p);
                }
            }
        }
    }
    Ok(LawTable::from_map(entries))
}

/// Law of `(R_n, S_n)` by full path enumeration.
pub fn path_range_law<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    config: &ExactConfig,
) -> Result<LawTable<P>, ExactError> {
    let group = mu.group();
    let enumeration = group.enumeration();
    enumerate(mu, n, config, |t| {
        let r = range_of(group, t);
        range_key(&enumeration, r.visited.elements().iter(), Some(&r.endpoint))
    })
}

/// Law of `Gamma_n`, or of `(Gamma_n, S_n)`, by full path enumeration.
pub fn path_trace_law<P: Probability>(
    mu: &StepDistribution,
    n: usize,
    with_endpoint: bool,
    config: &ExactConfig,
) -> Result<LawTable<P>, ExactError> {
    let group = mu.group();
    let enumeration = group.enumeration();
    enumerate(mu, n, config, |t| {
        let g = trace_of(group, t);
        Ok(if with_endpoint {
            trace_codec::canonical_key_with_endpoint(&g, t.endpoint(), &enumeration)?
        } else {
            trace_codec::canonical_key(&g, &enumeration)?
        })
    })
}
