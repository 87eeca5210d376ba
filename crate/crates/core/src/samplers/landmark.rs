//! Landmark window: delegate to an inner sampler and restart it from
//! scratch after every `window` records.

use crate::dist::Key;
use crate::error::{Error, Result};

use super::{Estimate, InnerFactory, QueryMode, Sampler};

pub struct Landmark {
    factory: InnerFactory,
    window: u64,
    inner: Box<dyn Sampler>,
    in_window: u64,
    total: u64,
}

impl Landmark {
    pub fn new(mut factory: InnerFactory, window: u64) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: "landmark window must be at least 1".into(),
            });
        }
        factory.validate()?;
        let inner = factory.spawn();
        Ok(Landmark {
            factory,
            window,
            inner,
            in_window: 0,
            total: 0,
        })
    }
}

impl Sampler for Landmark {
    fn record(&mut self, key: Key) {
        self.total += 1;
        self.inner.record(key);
        self.in_window += 1;
        if self.in_window == self.window {
            self.inner = self.factory.spawn();
            self.in_window = 0;
        }
    }

    fn query(&self, mode: QueryMode) -> Estimate {
        self.inner.query(mode)
    }

    fn counter_count(&self) -> usize {
        self.inner.counter_count()
    }

    fn total_processed(&self) -> u64 {
        self.total
    }
}
