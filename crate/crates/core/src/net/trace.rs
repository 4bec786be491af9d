use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of the trace CSV: `msg_id,sender,receiver,delay_ms`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub msg_id: String,
    pub sender: u32,
    pub receiver: u32,
    pub delay_ms: u64,
}

impl TraceRecord {
    pub fn new(msg_id: impl Into<String>, sender: u32, receiver: u32, delay_ms: u64) -> Self {
        Self {
            msg_id: msg_id.into(),
            sender,
            receiver,
            delay_ms,
        }
    }
}

/// Receiver delays of one recorded broadcast.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageDelays {
    pub msg_id: String,
    pub receivers: Vec<u32>,
    pub delays: Vec<u64>,
}

/// Immutable set of propagation measurements, indexed by sender.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceSet {
    records: Vec<TraceRecord>,
    by_sender: BTreeMap<u32, Vec<MessageDelays>>,
}

impl TraceSet {
    pub fn from_records(records: Vec<TraceRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut by_sender: BTreeMap<u32, Vec<MessageDelays>> = BTreeMap::new();
        let mut slot_of: BTreeMap<(u32, &str), usize> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert((r.msg_id.as_str(), r.receiver)) {
                return Err(Error::DuplicateTraceRecord {
                    line: i as u64 + 2,
                    msg_id: r.msg_id.clone(),
                    receiver: r.receiver,
                });
            }
            let msgs = by_sender.entry(r.sender).or_default();
            let idx = *slot_of.entry((r.sender, r.msg_id.as_str())).or_insert_with(|| {
                msgs.push(MessageDelays {
                    msg_id: r.msg_id.clone(),
                    receivers: Vec::new(),
                    delays: Vec::new(),
                });
                msgs.len() - 1
            });
            msgs[idx].receivers.push(r.receiver);
            msgs[idx].delays.push(r.delay_ms);
        }
        Ok(Self { records, by_sender })
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Broadcasts of `sender` in first-appearance order.
    pub fn messages_from(&self, sender: u32) -> Option<&[MessageDelays]> {
        self.by_sender.get(&sender).map(Vec::as_slice)
    }

    pub fn senders(&self) -> impl Iterator<Item = u32> + '_ {
        self.by_sender.keys().copied()
    }

    pub fn merge(self, other: TraceSet) -> Result<TraceSet> {
        let mut records = self.records;
        records.extend(other.records);
        TraceSet::from_records(records)
    }
}

#[derive(Deserialize)]
struct RawRow {
    msg_id: String,
    sender: i64,
    receiver: i64,
    delay_ms: i64,
}

/// Parse a trace CSV with header `msg_id,sender,receiver,delay_ms`.
pub fn load_trace(path: impl AsRef<Path>) -> Result<TraceSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(file)
}

pub fn read_trace(reader: impl std::io::Read) -> Result<TraceSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["msg_id", "sender", "receiver", "delay_ms"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::MalformedTrace {
            line: 1,
            reason: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in rdr.deserialize::<RawRow>() {
        let row = row.map_err(|e| Error::MalformedTrace {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = records.len() as u64 + 2;
        let non_neg = |v: i64, what: &str| {
            u64::try_from(v).map_err(|_| Error::MalformedTrace {
                line,
                reason: format!("{what} {v} is negative"),
            })
        };
        let sender = non_neg(row.sender, "sender")?;
        let receiver = non_neg(row.receiver, "receiver")?;
        let delay_ms = non_neg(row.delay_ms, "delay_ms")?;
        let id = |v: u64, what: &str| {
            u32::try_from(v).map_err(|_| Error::MalformedTrace {
                line,
                reason: format!("{what} {v} out of range"),
            })
        };
        records.push(TraceRecord {
            msg_id: row.msg_id,
            sender: id(sender, "sender")?,
            receiver: id(receiver, "receiver")?,
            delay_ms,
        });
    }
    TraceSet::from_records(records)
}

pub fn write_trace(trace: &TraceSet, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    // Header is emitted explicitly so an empty trace still carries it.
    w.write_record(["msg_id", "sender", "receiver", "delay_ms"])?;
    for r in trace.records() {
        w.write_record([
            r.msg_id.as_str(),
            &r.sender.to_string(),
            &r.receiver.to_string(),
            &r.delay_ms.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace output>", e))?;
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct SyntheticSender {
    pub sender: u32,
    pub median_ms: f64,
    pub sigma: f64,
}

/// Lognormal stand-in for a gossip measurement: each sender broadcasts
/// `messages` messages received by every other of the `nodes` nodes.
pub fn synthetic_trace<R: Rng + ?Sized>(
    senders: &[SyntheticSender],
    nodes: u32,
    messages: u32,
    rng: &mut R,
) -> Result<TraceSet> {
    let mut records = Vec::new();
    for s in senders {
        if s.sender >= nodes {
            return Err(Error::config("sender", format!("{} >= {nodes} nodes", s.sender)));
        }
        let dist = super::lognormal(s.median_ms, s.sigma)?;
        for m in 0..messages {
            let msg_id = format!("s{}-m{m}", s.sender);
            for receiver in (0..nodes).filter(|&r| r != s.sender) {
                let delay = dist.sample(rng).round().max(0.0) as u64;
                records.push(TraceRecord::new(msg_id.clone(), s.sender, receiver, delay));
            }
        }
    }
    TraceSet::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_with_header() {
        let t = read_trace("msg_id,sender,receiver,delay_ms\n".as_bytes()).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn three_rows() {
        let csv = "msg_id,sender,receiver,delay_ms\na,0,1,10\na,0,2,20\nb,1,0,7\n";
        let t = read_trace(csv.as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.messages_from(0).unwrap()[0].delays, vec![10, 20]);
        assert_eq!(t.senders().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn negative_delay_rejected_with_line() {
        let csv = "msg_id,sender,receiver,delay_ms\na,0,1,10\na,0,2,-5\n";
        let err = read_trace(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedTrace { line: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "msg_id,sender,receiver,delay_ms\na,0,1,10\na,zero,2,5\n";
        let err = read_trace(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedTrace { line: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_receiver_rejected() {
        let csv = "msg_id,sender,receiver,delay_ms\na,0,1,10\na,0,1,11\n";
        let err = read_trace(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateTraceRecord { line: 3, .. }), "{err}");
    }

    #[test]
    fn wrong_header_rejected() {
        let err = read_trace("id,from,to,ms\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedTrace { line: 1, .. }));
    }

    #[test]
    fn write_then_read_preserves_records() {
        let t = read_trace("msg_id,sender,receiver,delay_ms\nx,3,4,99\n".as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_trace(&t, &mut buf).unwrap();
        assert_eq!(read_trace(buf.as_slice()).unwrap(), t);
    }
}
