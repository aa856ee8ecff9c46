//! Drop-tail FIFO queues and a store-and-forward transmit port.

use std::collections::VecDeque;

use crate::sim::SimTime;

/// Anything that occupies link capacity.
pub trait WireSize {
    fn wire_bytes(&self) -> u64;
}

#[derive(Clone, Debug)]
pub struct Queued<T> {
    pub item: T,
    pub enqueued: SimTime,
}

/// Byte-limited drop-tail FIFO.
#[derive(Clone, Debug)]
pub struct DropTailQueue<T> {
    items: VecDeque<Queued<T>>,
    bytes: u64,
    capacity: u64,
}

impl<T: WireSize> DropTailQueue<T> {
    pub fn new(capacity: u64) -> Self {
        DropTailQueue { items: VecDeque::new(), bytes: 0, capacity }
    }

    /// Appends `item`, or hands it back if it would overflow the buffer.
    pub fn push(&mut self, item: T, now: SimTime) -> Result<(), T> {
        let b = item.wire_bytes();
        if self.bytes + b > self.capacity {
            return Err(item);
        }
        self.bytes += b;
        self.items.push_back(Queued { item, enqueued: now });
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Queued<T>> {
        let q = self.items.pop_front()?;
        self.bytes -= q.item.wire_bytes();
        Some(q)
    }

    pub fn front(&self) -> Option<&Queued<T>> {
        self.items.front()
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Queued<T>> {
        self.items.iter()
    }
}

/// Outcome of offering a packet to a [`Port`].
#[derive(Debug)]
pub enum Offer<T> {
    Dropped(T),
    Queued,
    /// The port was idle; transmission of the packet ends at the given time.
    Started { tx_end: SimTime },
}

/// A queue drained by a single transmitter at a fixed rate.
#[derive(Clone, Debug)]
pub struct Port<T> {
    queue: DropTailQueue<T>,
    rate_bps: f64,
    in_service: Option<(Queued<T>, SimTime)>,
}

/// Packet leaving a port, with its queueing delay.
#[derive(Debug)]
pub struct Departure<T> {
    pub item: T,
    pub enqueued: SimTime,
    pub tx_start: SimTime,
    /// When the next packet (if any) finishes transmission.
    pub next_tx_end: Option<SimTime>,
}

impl<T: WireSize> Port<T> {
    pub fn new(rate_bps: f64, capacity: u64) -> Self {
        Port { queue: DropTailQueue::new(capacity), rate_bps, in_service: None }
    }

    pub fn rate(&self) -> f64 {
        self.rate_bps
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    /// Packets waiting plus the one being transmitted.
    pub fn resident(&self) -> usize {
        self.queue.len() + usize::from(self.in_service.is_some())
    }

    pub fn queued_bytes(&self) -> u64 {
        self.queue.bytes()
    }

    /// Packets held by the port: the one in service, then the queue.
    pub fn resident_items(&self) -> impl Iterator<Item = &T> {
        self.in_service
            .iter()
            .map(|(q, _)| &q.item)
            .chain(self.queue.iter().map(|q| &q.item))
    }

    pub fn offer(&mut self, item: T, now: SimTime) -> Offer<T> {
        if let Err(item) = self.queue.push(item, now) {
            return Offer::Dropped(item);
        }
        if self.in_service.is_none() {
            let tx_end = self.start_next(now).expect("just queued");
            Offer::Started { tx_end }
        } else {
            Offer::Queued
        }
    }

    fn start_next(&mut self, now: SimTime) -> Option<SimTime> {
        let q = self.queue.pop()?;
        let tx_end = now + SimTime::transmission(q.item.wire_bytes(), self.rate_bps);
        self.in_service = Some((q, now));
        Some(tx_end)
    }

    /// Completes the current transmission and starts the next one.
    ///
    /// Panics if the port is idle: a completion event without a packet in
    /// service means the caller's event bookkeeping is broken.
    pub fn complete(&mut self, now: SimTime) -> Departure<T> {
        let (q, tx_start) = self.in_service.take().expect("completion on idle port");
        let next_tx_end = self.start_next(now);
        Departure { item: q.item, enqueued: q.enqueued, tx_start, next_tx_end }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    impl WireSize for u64 {
        fn wire_bytes(&self) -> u64 {
            *self
        }
    }

    #[test]
    fn drop_tail_overflow() {
        let mut q = DropTailQueue::new(3000);
        assert!(q.push(1500u64, SimTime::ZERO).is_ok());
        assert!(q.push(1500u64, SimTime::ZERO).is_ok());
        assert_eq!(q.push(1u64, SimTime::ZERO), Err(1));
        assert_eq!(q.bytes(), 3000);
        q.pop();
        assert_eq!(q.bytes(), 1500);
    }

    #[test]
    fn port_serialises_back_to_back() {
        let mut p: Port<u64> = Port::new(1e9, 1 << 20);
        let t0 = SimTime::ZERO;
        let end = match p.offer(1500, t0) {
            Offer::Started { tx_end } => tx_end,
            other => panic!("{other:?}"),
        };
        assert_eq!(end, SimTime::from_secs(12e-6));
        assert!(matches!(p.offer(1500, t0), Offer::Queued));
        let d = p.complete(end);
        assert_eq!(d.tx_start, t0);
        assert_eq!(d.next_tx_end, Some(SimTime::from_secs(24e-6)));
        let d2 = p.complete(d.next_tx_end.unwrap());
        assert_eq!(d2.enqueued, t0);
        assert_eq!(d2.tx_start, end);
        assert!(!p.is_busy());
    }
}
