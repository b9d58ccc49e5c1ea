use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Extra spacing added to the window so that request arrival jitter on the
/// far side cannot squeeze an extra request into one second.
const GUARD: Duration = Duration::from_millis(20);

/// Sliding-window limiter shared by every request to one source.
///
/// At `rate >= 1` it admits `floor(rate)` requests per second; below one it
/// admits a single request every `1 / rate` seconds.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: usize,
    window: Duration,
    sent: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(rate: f64) -> Self {
        assert!(rate > 0.0, "rate limit must be positive");
        let (capacity, window) = if !rate.is_finite() {
            (usize::MAX, Duration::ZERO)
        } else if rate >= 1.0 {
            (rate.floor() as usize, Duration::from_secs(1))
        } else {
            (1, Duration::from_secs_f64(1.0 / rate))
        };
        RateLimiter {
            capacity,
            window: if window.is_zero() { window } else { window + GUARD },
            sent: Mutex::new(VecDeque::new()),
        }
    }

    pub fn unlimited() -> Self {
        RateLimiter::new(f64::INFINITY)
    }

    /// Blocks until a request may be sent and records it.
    pub fn acquire(&self) {
        if self.capacity == usize::MAX {
            return;
        }
        loop {
            let wait = {
                let mut sent = self.sent.lock().expect("rate limiter lock");
                let now = Instant::now();
                while sent.front().is_some_and(|&t| now.duration_since(t) >= self.window) {
                    sent.pop_front();
                }
                if sent.len() < self.capacity {
                    sent.push_back(now);
                    return;
                }
                self.window - now.duration_since(sent[0])
            };
            std::thread::sleep(wait);
        }
    }
}
