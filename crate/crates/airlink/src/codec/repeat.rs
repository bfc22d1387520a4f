//! Repetition expansion: transmit each value `r` times, average at the
//! receiver. Averaging `r` independent noise samples divides the noise
//! variance by `r`.

use crate::error::{Error, Result};

pub fn repeat_encode(w: f64, r: usize) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::Config("repetition factor must be at least 1".into()));
    }
    Ok(vec![w; r])
}

pub fn repeat_decode(ys: &[f64]) -> Result<f64> {
    if ys.is_empty() {
        return Err(Error::Empty("cannot average an empty repetition".into()));
    }
    Ok(ys.iter().sum::<f64>() / ys.len() as f64)
}
