use super::{two_tailed, PairedSample, TestKind, TestOutcome};
use crate::error::{Error, Result};
use crate::special::t_upper;

/// Paired Student's t-test: `t = mean_d / (sd_d / sqrt(n))` on `n - 1`
/// degrees of freedom.
pub fn t_test(sample: &PairedSample) -> Result<TestOutcome> {
    let n = sample.n();
    if n < 2 {
        return Err(Error::InsufficientSample { needed: 2, got: n });
    }
    let sd = sample.sd_d();
    let scale = sample
        .differences()
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    if sd <= 1e-12 * scale || sd == 0.0 {
        return Err(Error::DegenerateSample(
            "differences have zero variance".into(),
        ));
    }
    let t = sample.mean_d() / (sd / (n as f64).sqrt());
    let df = (n - 1) as f64;
    let p1 = t_upper(t, df);
    Ok(TestOutcome {
        test: TestKind::T,
        statistic: t,
        p1,
        p2: two_tailed(p1, t_upper(-t, df)),
        replicas: None,
        seed: None,
    })
}
