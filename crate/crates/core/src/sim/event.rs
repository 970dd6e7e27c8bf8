use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    TaskArrival,
    TxComplete,
    ExecComplete,
    DeadlineExpiry,
    MobilityTick,
    BatchFlush,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Enqueue order; breaks ties between equal times first-in first-out.
    pub seq: u64,
    pub kind: EventKind,
    pub task_id: Option<u64>,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue of events ordered by `(time, seq)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules an event. Panics if `time` lies in the past.
    pub fn push(&mut self, time: f64, kind: EventKind, task_id: Option<u64>) {
        assert!(time >= self.now && time.is_finite(), "event {kind:?} scheduled at {time} before clock {}", self.now);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind, task_id });
    }

    pub fn pop(&mut self) -> Option<Event> {
        let event = self.heap.pop()?;
        self.now = event.time;
        Some(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_time_then_fifo() {
        let mut q = EventQueue::new();
        q.push(2.0, EventKind::MobilityTick, None);
        q.push(1.0, EventKind::TaskArrival, Some(7));
        q.push(1.0, EventKind::TaskArrival, Some(3));
        q.push(0.5, EventKind::BatchFlush, None);
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| (e.time, e.task_id)).collect();
        assert_eq!(order, vec![(0.5, None), (1.0, Some(7)), (1.0, Some(3)), (2.0, None)]);
    }

    #[test]
    #[should_panic]
    fn rejects_past_events() {
        let mut q = EventQueue::new();
        q.push(5.0, EventKind::MobilityTick, None);
        q.pop();
        q.push(4.0, EventKind::MobilityTick, None);
    }
}
