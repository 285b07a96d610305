//! Point-to-point message transport between ranks.
//!
//! Sends are synchronous: they return only once the matching receive has
//! taken the message. The halo schedule relies on this to be deadlock-free by
//! construction rather than by buffering.

use std::time::Duration;

use crossbeam_channel::{bounded, Receiver, RecvTimeoutError, Sender};

use crate::error::{Error, Result};

/// Rank-addressed synchronous send and blocking receive of `f64` payloads.
///
/// Calls on one rank come from one thread at a time, though not always the
/// same thread.
pub trait Communicator: Sync {
    fn rank(&self) -> usize;
    fn size(&self) -> usize;
    /// Blocks until `dest` has received the message.
    fn send(&self, dest: usize, tag: u32, data: &[f64]) -> Result<()>;
    /// Blocks for the next message from `src`; its tag must equal `tag`.
    fn recv_vec(&self, src: usize, tag: u32) -> Result<Vec<f64>>;

    /// Receives into `buf`, which must match the payload length exactly.
    fn recv(&self, src: usize, tag: u32, buf: &mut [f64]) -> Result<()> {
        let data = self.recv_vec(src, tag)?;
        if data.len() != buf.len() {
            return Err(self.failure(
                format!("recv from {src}, tag {tag}"),
                format!("payload of {} values, expected {}", data.len(), buf.len()),
            ));
        }
        buf.copy_from_slice(&data);
        Ok(())
    }

    fn failure(&self, phase: String, reason: String) -> Error {
        Error::Communication {
            rank: self.rank(),
            phase,
            reason,
        }
    }
}

struct Message {
    tag: u32,
    data: Vec<f64>,
}

/// In-process transport: one thread per rank, rendezvous channels between
/// every ordered pair of ranks.
pub struct LoopbackComm {
    rank: usize,
    outgoing: Vec<Sender<Message>>,
    incoming: Vec<Receiver<Message>>,
    timeout: Duration,
}

/// Default time a loopback receive waits before reporting a missing message.
pub const LOOPBACK_TIMEOUT: Duration = Duration::from_secs(120);

impl LoopbackComm {
    /// Endpoints for `size` ranks, index = rank.
    pub fn create(size: usize) -> Vec<LoopbackComm> {
        Self::create_with_timeout(size, LOOPBACK_TIMEOUT)
    }

    pub fn create_with_timeout(size: usize, timeout: Duration) -> Vec<LoopbackComm> {
        // channel[src][dst]
        let mut tx: Vec<Vec<Option<Sender<Message>>>> = Vec::with_capacity(size);
        let mut rx: Vec<Vec<Option<Receiver<Message>>>> = Vec::with_capacity(size);
        for _ in 0..size {
            let mut trow = Vec::with_capacity(size);
            let mut rrow = Vec::with_capacity(size);
            for _ in 0..size {
                let (s, r) = bounded(0);
                trow.push(Some(s));
                rrow.push(Some(r));
            }
            tx.push(trow);
            rx.push(rrow);
        }
        (0..size)
            .map(|rank| LoopbackComm {
                rank,
                outgoing: (0..size).map(|d| tx[rank][d].take().unwrap()).collect(),
                incoming: (0..size).map(|s| rx[s][rank].take().unwrap()).collect(),
                timeout,
            })
            .collect()
    }
}

impl Communicator for LoopbackComm {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.outgoing.len()
    }

    fn send(&self, dest: usize, tag: u32, data: &[f64]) -> Result<()> {
        let phase = || format!("send to {dest}, tag {tag}");
        let chan = self
            .outgoing
            .get(dest)
            .ok_or_else(|| self.failure(phase(), format!("no rank {dest}")))?;
        let msg = Message {
            tag,
            data: data.to_vec(),
        };
        chan.send_timeout(msg, self.timeout)
            .map_err(|e| self.failure(phase(), format!("receiver not ready: {e}")))
    }

    fn recv_vec(&self, src: usize, tag: u32) -> Result<Vec<f64>> {
        let phase = || format!("recv from {src}, tag {tag}");
        let chan = self
            .incoming
            .get(src)
            .ok_or_else(|| self.failure(phase(), format!("no rank {src}")))?;
        let msg = chan.recv_timeout(self.timeout).map_err(|e| {
            let reason = match e {
                RecvTimeoutError::Timeout => format!("no message within {:?}", self.timeout),
                RecvTimeoutError::Disconnected => "sender hung up".to_string(),
            };
            self.failure(phase(), reason)
        })?;
        if msg.tag != tag {
            return Err(self.failure(phase(), format!("got tag {}", msg.tag)));
        }
        Ok(msg.data)
    }
}

/// Single-process transport with no peers.
#[derive(Debug, Clone, Copy, Default)]
pub struct SoloComm;

impl Communicator for SoloComm {
    fn rank(&self) -> usize {
        0
    }

    fn size(&self) -> usize {
        1
    }

    fn send(&self, dest: usize, tag: u32, _data: &[f64]) -> Result<()> {
        Err(self.failure(format!("send to {dest}, tag {tag}"), "single-rank run".into()))
    }

    fn recv_vec(&self, src: usize, tag: u32) -> Result<Vec<f64>> {
        Err(self.failure(format!("recv from {src}, tag {tag}"), "single-rank run".into()))
    }
}

#[cfg(feature = "mpi")]
pub use self::mpi_backend::MpiComm;

#[cfg(feature = "mpi")]
mod mpi_backend {
    use mpi::datatype::Equivalence;
    use mpi::point_to_point::{Destination, Source};
    use mpi::topology::{Communicator as _, SimpleCommunicator};

    use super::Communicator;
    use crate::error::Result;

    /// Message-passing backend over `MPI_COMM_WORLD` using `MPI_Ssend`.
    pub struct MpiComm {
        world: SimpleCommunicator,
    }

    // Only one thread drives a rank's communicator at a time, which the
    // serialized threading level permits from any thread.
    unsafe impl Send for MpiComm {}
    unsafe impl Sync for MpiComm {}

    impl MpiComm {
        /// Wraps the world communicator of a universe initialized with at
        /// least `Threading::Serialized`.
        pub fn new(universe: &mpi::environment::Universe) -> Self {
            Self {
                world: universe.world(),
            }
        }
    }

    impl Communicator for MpiComm {
        fn rank(&self) -> usize {
            self.world.rank() as usize
        }

        fn size(&self) -> usize {
            self.world.size() as usize
        }

        fn send(&self, dest: usize, tag: u32, data: &[f64]) -> Result<()> {
            self.world
                .process_at_rank(dest as i32)
                .synchronous_send_with_tag(data, tag as i32);
            Ok(())
        }

        fn recv_vec(&self, src: usize, tag: u32) -> Result<Vec<f64>> {
            let (data, status) = self
                .world
                .process_at_rank(src as i32)
                .receive_vec_with_tag::<f64>(tag as i32);
            let count = status.count(f64::equivalent_datatype()) as usize;
            if count != data.len() {
                return Err(self.failure(
                    format!("recv from {src}, tag {tag}"),
                    format!("status reports {count} values, buffer holds {}", data.len()),
                ));
            }
            Ok(data)
        }
    }
}
