use rustc_hash::FxHashMap;

use crate::groups::{GroupElement, StepDistribution};

use super::ExactError;

pub(crate) const NO_ID: u32 = u32::MAX;

/// Elements reachable from `e` in at most `radius` steps, interned as dense
/// ids in breadth-first order, with the successor table `id * x_s`.
pub(crate) struct CayleyBall {
    pub elements: Vec<GroupElement>,
    succ: Vec<u32>,
    width: usize,
}

impl CayleyBall {
    pub fn build(mu: &StepDistribution, radius: usize, cap: usize) -> Result<Self, ExactError> {
        let group = mu.group();
        let steps: Vec<GroupElement> = mu.elements().cloned().collect();
        let width = steps.len();
        let mut elements = vec![group.identity()];
        let mut index = FxHashMap::default();
        index.insert(group.identity(), 0u32);
        let mut succ: Vec<u32> = Vec::new();
        let mut layer_start = 0usize;
        for _ in 0..radius {
            let layer_end = elements.len();
            for id in layer_start..layer_end {
                succ.resize((id + 1) * width, NO_ID);
                for (s, x) in steps.iter().enumerate() {
                    let mut y = elements[id].clone();
                    group.mul_assign(&mut y, x);
                    let next = match index.get(&y) {
                        Some(&j) => j,
                        None => {
                            if elements.len() >= cap {
                                return Err(ExactError::Resource {
                                    what: "group elements",
                                    limit: cap,
                                });
                            }
                            let j = elements.len() as u32;
                            index.insert(y.clone(), j);
                            elements.push(y);
                            j
                        }
                    };
                    succ[id * width + s] = next;
                }
            }
            layer_start = layer_end;
        }
        succ.resize(elements.len() * width, NO_ID);
        Ok(CayleyBall { elements, succ, width })
    }

    #[inline]
    pub fn next(&self, id: u32, step: usize) -> u32 {
        let j = self.succ[id as usize * self.width + step];
        debug_assert!(j != NO_ID, "walk left the precomputed ball");
        j
    }
}
