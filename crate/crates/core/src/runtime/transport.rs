//! Message delivery between solvers: an in-process bus and a TCP hub that
//! frames JSON envelopes with a 4-byte big-endian length.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use tracing::{debug, warn};

use crate::partition::SolverId;

use super::messages::Envelope;
use super::RuntimeError;

const MAX_FRAME: usize = 256 << 20;

/// Point-to-point delivery for one solver.
pub trait Transport: Send {
    fn id(&self) -> SolverId;
    fn solver_count(&self) -> usize;
    fn send(&self, env: Envelope) -> Result<(), RuntimeError>;
    /// Next envelope addressed to this solver, or `Ok(None)` on timeout.
    fn recv(&self, timeout: Duration) -> Result<Option<Envelope>, RuntimeError>;
}

fn recv_from(rx: &Receiver<Envelope>, timeout: Duration) -> Result<Option<Envelope>, RuntimeError> {
    match rx.recv_timeout(timeout) {
        Ok(e) => Ok(Some(e)),
        Err(RecvTimeoutError::Timeout) => Ok(None),
        Err(RecvTimeoutError::Disconnected) => Err(RuntimeError::Transport("inbox closed".into())),
    }
}

pub struct InProcEndpoint {
    id: SolverId,
    peers: Arc<Vec<Sender<Envelope>>>,
    inbox: Receiver<Envelope>,
}

/// One connected endpoint per solver, ids `1..=n`.
pub fn in_process(n: usize) -> Vec<InProcEndpoint> {
    let (txs, rxs): (Vec<_>, Vec<_>) = (0..n).map(|_| mpsc::channel()).unzip();
    let peers = Arc::new(txs);
    rxs.into_iter()
        .enumerate()
        .map(|(i, inbox)| InProcEndpoint {
            id: SolverId(i as u32 + 1),
            peers: peers.clone(),
            inbox,
        })
        .collect()
}

impl Transport for InProcEndpoint {
    fn id(&self) -> SolverId {
        self.id
    }

    fn solver_count(&self) -> usize {
        self.peers.len()
    }

    fn send(&self, env: Envelope) -> Result<(), RuntimeError> {
        let to = env.to;
        self.peers
            .get((to.0 as usize).wrapping_sub(1))
            .ok_or_else(|| RuntimeError::Transport(format!("no solver {to}")))?
            .send(env)
            .map_err(|_| RuntimeError::Transport(format!("solver {to} is gone")))
    }

    fn recv(&self, timeout: Duration) -> Result<Option<Envelope>, RuntimeError> {
        recv_from(&self.inbox, timeout)
    }
}

pub fn write_frame(w: &mut impl Write, env: &Envelope) -> io::Result<()> {
    let bytes = serde_json::to_vec(env).map_err(io::Error::other)?;
    let len = u32::try_from(bytes.len()).map_err(io::Error::other)?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(&bytes)?;
    w.flush()
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<Envelope>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    serde_json::from_slice(&buf)
        .map(Some)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Which process (1-based) hosts `solver` when `n` solvers are spread over
/// `procs` processes in contiguous blocks.
pub fn process_of(solver: SolverId, n: usize, procs: usize) -> usize {
    (solver.0 as usize - 1) * procs / n + 1
}

struct Hub {
    process: usize,
    endpoints: Vec<SocketAddr>,
    solvers: usize,
    local: HashMap<SolverId, Sender<Envelope>>,
    conns: Mutex<HashMap<usize, TcpStream>>,
    connect_timeout: Duration,
}

impl Hub {
    fn deliver(&self, env: Envelope) -> Result<(), RuntimeError> {
        let to = env.to;
        if let Some(tx) = self.local.get(&to) {
            return tx
                .send(env)
                .map_err(|_| RuntimeError::Transport(format!("solver {to} is gone")));
        }
        if to.0 == 0 || to.0 as usize > self.solvers {
            return Err(RuntimeError::Transport(format!("no solver {to}")));
        }
        let proc = process_of(to, self.solvers, self.endpoints.len());
        let mut conns = self.conns.lock().expect("connection table");
        for attempt in 0..2 {
            if !conns.contains_key(&proc) {
                conns.insert(proc, self.connect(proc)?);
            }
            let stream = conns.get_mut(&proc).expect("just inserted");
            match write_frame(stream, &env) {
                Ok(()) => return Ok(()),
                Err(e) if attempt == 0 => {
                    warn!(process = proc, error = %e, "write failed, reconnecting");
                    conns.remove(&proc);
                }
                Err(e) => return Err(RuntimeError::Transport(format!("send to process {proc}: {e}"))),
            }
        }
        unreachable!("second attempt returns")
    }

    fn connect(&self, proc: usize) -> Result<TcpStream, RuntimeError> {
        let addr = self.endpoints[proc - 1];
        let deadline = Instant::now() + self.connect_timeout;
        loop {
            match TcpStream::connect(addr) {
                Ok(s) => {
                    let _ = s.set_nodelay(true);
                    debug!(from = self.process, to = proc, %addr, "connected");
                    return Ok(s);
                }
                Err(e) if Instant::now() >= deadline => {
                    return Err(RuntimeError::Transport(format!("connect to {addr}: {e}")))
                }
                Err(_) => thread::sleep(Duration::from_millis(25)),
            }
        }
    }
}

pub struct TcpEndpoint {
    id: SolverId,
    hub: Arc<Hub>,
    inbox: Receiver<Envelope>,
}

impl Transport for TcpEndpoint {
    fn id(&self) -> SolverId {
        self.id
    }

    fn solver_count(&self) -> usize {
        self.hub.solvers
    }

    fn send(&self, env: Envelope) -> Result<(), RuntimeError> {
        self.hub.deliver(env)
    }

    fn recv(&self, timeout: Duration) -> Result<Option<Envelope>, RuntimeError> {
        recv_from(&self.inbox, timeout)
    }
}

/// Binds this process's endpoint and returns endpoints for the solvers it
/// hosts. Frames for local solvers never touch the network.
pub fn tcp_process(
    process: usize,
    endpoints: Vec<SocketAddr>,
    solvers: usize,
    connect_timeout: Duration,
) -> Result<Vec<TcpEndpoint>, RuntimeError> {
    if process == 0 || process > endpoints.len() {
        return Err(RuntimeError::Transport(format!(
            "process {process} not in 1..={}",
            endpoints.len()
        )));
    }
    let listener = TcpListener::bind(endpoints[process - 1])
        .map_err(|e| RuntimeError::Transport(format!("bind {}: {e}", endpoints[process - 1])))?;
    let mut local = HashMap::new();
    let mut inboxes = Vec::new();
    for s in 1..=solvers as u32 {
        let id = SolverId(s);
        if process_of(id, solvers, endpoints.len()) == process {
            let (tx, rx) = mpsc::channel();
            local.insert(id, tx);
            inboxes.push((id, rx));
        }
    }
    let hub = Arc::new(Hub {
        process,
        endpoints,
        solvers,
        local,
        conns: Mutex::new(HashMap::new()),
        connect_timeout,
    });
    let accept_hub = hub.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let hub = accept_hub.clone();
            thread::spawn(move || loop {
                match read_frame(&mut stream) {
                    Ok(Some(env)) => {
                        if let Err(e) = hub.deliver(env) {
                            warn!(error = %e, "dropping frame");
                        }
                    }
                    Ok(None) => break,
                    Err(e) => {
                        warn!(error = %e, "connection closed");
                        break;
                    }
                }
            });
        }
    });
    Ok(inboxes
        .into_iter()
        .map(|(id, inbox)| TcpEndpoint {
            id,
            hub: hub.clone(),
            inbox,
        })
        .collect())
}
