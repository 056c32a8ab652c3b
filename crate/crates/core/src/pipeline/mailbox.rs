//! Depth-one channel where a new message replaces an unread one.

use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("mailbox peer disconnected")]
pub struct Disconnected;

/// A message with the slot's sequence number and the time it was put.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<T> {
    pub seq: u64,
    pub put_at_us: u64,
    pub value: T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MailboxStats {
    pub puts: u64,
    /// Messages overwritten before being taken.
    pub drops: u64,
    pub takes: u64,
}

struct Slot<T> {
    message: Option<Envelope<T>>,
    next_seq: u64,
    writer_alive: bool,
    reader_alive: bool,
    stats: MailboxStats,
}

struct Shared<T> {
    slot: Mutex<Slot<T>>,
    ready: Condvar,
}

impl<T> Shared<T> {
    fn lock(&self) -> MutexGuard<'_, Slot<T>> {
        // a panicking peer cannot leave the slot half-written
        self.slot.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub struct MailboxWriter<T> {
    shared: Arc<Shared<T>>,
}

pub struct MailboxReader<T> {
    shared: Arc<Shared<T>>,
}

pub fn mailbox<T>() -> (MailboxWriter<T>, MailboxReader<T>) {
    let shared = Arc::new(Shared {
        slot: Mutex::new(Slot {
            message: None,
            next_seq: 0,
            writer_alive: true,
            reader_alive: true,
            stats: MailboxStats::default(),
        }),
        ready: Condvar::new(),
    });
    (MailboxWriter { shared: shared.clone() }, MailboxReader { shared })
}

impl<T> MailboxWriter<T> {
    /// Stores `value`, replacing any unread message. Fails once the reader
    /// is gone; the value is discarded.
    pub fn put(&self, value: T, now_us: u64) -> Result<u64, Disconnected> {
        let mut slot = self.shared.lock();
        if !slot.reader_alive {
            return Err(Disconnected);
        }
        let seq = slot.next_seq;
        slot.next_seq += 1;
        slot.stats.puts += 1;
        if slot
            .message
            .replace(Envelope {
                seq,
                put_at_us: now_us,
                value,
            })
            .is_some()
        {
            slot.stats.drops += 1;
        }
        drop(slot);
        self.shared.ready.notify_one();
        Ok(seq)
    }
}

impl<T> Drop for MailboxWriter<T> {
    fn drop(&mut self) {
        self.shared.lock().writer_alive = false;
        self.shared.ready.notify_all();
    }
}

impl<T> MailboxReader<T> {
    /// Latest message if any. Fails only when the slot is empty and the
    /// writer is gone.
    pub fn try_take(&self) -> Result<Option<Envelope<T>>, Disconnected> {
        let mut slot = self.shared.lock();
        Self::take_locked(&mut slot)
    }

    /// Like [`try_take`](Self::try_take) but waits up to `timeout` for a
    /// message.
    pub fn take_timeout(&self, timeout: Duration) -> Result<Option<Envelope<T>>, Disconnected> {
        let slot = self.shared.lock();
        let (mut slot, _) = self
            .shared
            .ready
            .wait_timeout_while(slot, timeout, |s| s.message.is_none() && s.writer_alive)
            .unwrap_or_else(|e| e.into_inner());
        Self::take_locked(&mut slot)
    }

    fn take_locked(slot: &mut Slot<T>) -> Result<Option<Envelope<T>>, Disconnected> {
        match slot.message.take() {
            Some(m) => {
                slot.stats.takes += 1;
                Ok(Some(m))
            }
            None if !slot.writer_alive => Err(Disconnected),
            None => Ok(None),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.shared.lock().message.is_none()
    }

    pub fn stats(&self) -> MailboxStats {
        self.shared.lock().stats
    }
}

impl<T> Drop for MailboxReader<T> {
    fn drop(&mut self) {
        let mut slot = self.shared.lock();
        slot.reader_alive = false;
        slot.message = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newer_message_replaces_unread_one() {
        let (w, r) = mailbox();
        w.put("v1", 0).unwrap();
        w.put("v2", 1).unwrap();
        let m = r.try_take().unwrap().unwrap();
        assert_eq!(m.value, "v2");
        assert_eq!(m.put_at_us, 1);
        assert_eq!(r.stats().drops, 1);
        assert_eq!(r.try_take(), Ok(None));
    }

    #[test]
    fn disconnect_seen_after_drain() {
        let (w, r) = mailbox();
        w.put(1, 0).unwrap();
        drop(w);
        assert_eq!(r.try_take().unwrap().unwrap().value, 1);
        assert_eq!(r.try_take(), Err(Disconnected));
        assert_eq!(r.take_timeout(Duration::from_secs(5)), Err(Disconnected));
    }

    #[test]
    fn put_fails_without_reader() {
        let (w, r) = mailbox();
        drop(r);
        assert_eq!(w.put(1, 0), Err(Disconnected));
    }

    #[test]
    fn taken_sequences_strictly_increase_across_threads() {
        let (w, r) = mailbox();
        let producer = std::thread::spawn(move || {
            for i in 0..1000u32 {
                w.put(i, 0).unwrap();
                if i % 7 == 0 {
                    std::thread::yield_now();
                }
            }
        });
        let mut last = None;
        let mut taken = 0;
        loop {
            match r.take_timeout(Duration::from_millis(100)) {
                Ok(Some(m)) => {
                    assert!(last.map_or(true, |l| m.seq > l));
                    last = Some(m.seq);
                    taken += 1;
                }
                Ok(None) => {}
                Err(Disconnected) => break,
            }
        }
        producer.join().unwrap();
        let s = r.stats();
        assert_eq!(s.puts, 1000);
        assert_eq!(s.takes, taken);
        assert_eq!(s.takes + s.drops, 1000);
        assert_eq!(last, Some(999));
    }
}
