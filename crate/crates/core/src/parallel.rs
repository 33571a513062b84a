use crate::error::{Error, Result};

/// Run `f` on a dedicated pool of `workers` threads.
///
/// Everything run through here must produce results independent of the
/// worker count: parallel maps collect in input order and reductions happen
/// sequentially afterwards.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
