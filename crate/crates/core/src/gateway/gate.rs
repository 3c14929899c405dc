use std::sync::{Condvar, Mutex};

/// Counting semaphore bounding simultaneous backend calls.
#[derive(Debug)]
pub struct Gate {
    capacity: usize,
    in_use: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a> {
    gate: &'a Gate,
}

impl Gate {
    /// A capacity of zero is treated as one.
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            in_use: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut in_use = self.in_use.lock().expect("gate poisoned");
        while *in_use >= self.capacity {
            in_use = self.freed.wait(in_use).expect("gate poisoned");
        }
        *in_use += 1;
        Permit { gate: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut in_use = self.gate.in_use.lock().expect("gate poisoned");
        *in_use -= 1;
        self.gate.freed.notify_one();
    }
}
