//! Frame transports. Both carry complete wire frames, prefix included.

use std::collections::{HashMap, HashSet};
use std::io::ErrorKind as IoKind;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::wire::{read_frame, write_frame};

/// Where a frame came from, and where its reply goes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Conn {
    Peer(String),
    Accepted(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("node `{0}` is unreachable")]
    Unreachable(String),
    #[error("connection closed")]
    Closed,
    #[error("{0}")]
    Io(String),
}

pub trait Endpoint: Send {
    fn send(&mut self, to: &Conn, frame: &[u8]) -> Result<(), TransportError>;

    /// `Ok(None)` when nothing arrives within `timeout`.
    fn recv(&mut self, timeout: Duration) -> Result<Option<(Conn, Vec<u8>)>, TransportError>;

    /// False once the peer is known to be gone.
    fn peer_alive(&self, peer: &str) -> bool;
}

/// In-process endpoints over channels.
pub fn loopback(nodes: &[String]) -> HashMap<String, LoopbackEndpoint> {
    let mut senders = HashMap::new();
    let mut receivers = HashMap::new();
    let mut alive = HashMap::new();
    for n in nodes {
        let (tx, rx) = mpsc::channel();
        senders.insert(n.clone(), tx);
        receivers.insert(n.clone(), rx);
        alive.insert(n.clone(), Arc::new(AtomicBool::new(true)));
    }
    receivers
        .into_iter()
        .map(|(n, rx)| {
            let ep = LoopbackEndpoint { me: n.clone(), rx, senders: senders.clone(), alive: alive.clone() };
            (n, ep)
        })
        .collect()
}

pub struct LoopbackEndpoint {
    me: String,
    rx: Receiver<(String, Vec<u8>)>,
    senders: HashMap<String, Sender<(String, Vec<u8>)>>,
    alive: HashMap<String, Arc<AtomicBool>>,
}

impl Endpoint for LoopbackEndpoint {
    fn send(&mut self, to: &Conn, frame: &[u8]) -> Result<(), TransportError> {
        let Conn::Peer(p) = to else { return Err(TransportError::Closed) };
        if !self.peer_alive(p) {
            return Err(TransportError::Unreachable(p.clone()));
        }
        let tx = self.senders.get(p).ok_or_else(|| TransportError::Unreachable(p.clone()))?;
        tx.send((self.me.clone(), frame.to_vec())).map_err(|_| TransportError::Unreachable(p.clone()))
    }

    fn recv(&mut self, timeout: Duration) -> Result<Option<(Conn, Vec<u8>)>, TransportError> {
        match self.rx.recv_timeout(timeout) {
            Ok((from, f)) => Ok(Some((Conn::Peer(from), f))),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(TransportError::Closed),
        }
    }

    fn peer_alive(&self, peer: &str) -> bool {
        self.alive.get(peer).is_some_and(|a| a.load(Ordering::SeqCst))
    }
}

impl Drop for LoopbackEndpoint {
    fn drop(&mut self) {
        if let Some(a) = self.alive.get(&self.me) {
            a.store(false, Ordering::SeqCst);
        }
    }
}

enum Event {
    Frame(Conn, Vec<u8>),
    Closed(Conn),
}

/// TCP endpoint: a listener for incoming connections, one lazily dialled
/// connection per peer. Replies travel back on the connection that carried
/// the request.
pub struct TcpEndpoint {
    peers: HashMap<String, SocketAddr>,
    dialed: HashMap<String, TcpStream>,
    accepted: Arc<Mutex<HashMap<u64, TcpStream>>>,
    closed: HashSet<Conn>,
    inbox: Receiver<Event>,
    inbox_tx: Sender<Event>,
    stop: Arc<AtomicBool>,
    local: SocketAddr,
    connect_timeout: Duration,
}

pub fn resolve(address: &str) -> Result<SocketAddr, TransportError> {
    address
        .to_socket_addrs()
        .map_err(|e| TransportError::Io(format!("{address}: {e}")))?
        .next()
        .ok_or_else(|| TransportError::Io(format!("{address}: no address")))
}

fn reader(mut s: TcpStream, conn: Conn, tx: Sender<Event>) {
    thread::spawn(move || {
        while let Ok(Some(frame)) = read_frame(&mut s) {
            if tx.send(Event::Frame(conn.clone(), frame)).is_err() {
                return;
            }
        }
        let _ = tx.send(Event::Closed(conn));
    });
}

impl TcpEndpoint {
    /// Binds the listener; peers are supplied later by [`TcpEndpoint::connect_to`].
    pub fn bind(address: &str) -> Result<TcpEndpoint, TransportError> {
        let listener = TcpListener::bind(resolve(address)?).map_err(|e| TransportError::Io(format!("bind {address}: {e}")))?;
        let local = listener.local_addr().map_err(|e| TransportError::Io(e.to_string()))?;
        listener.set_nonblocking(true).map_err(|e| TransportError::Io(e.to_string()))?;
        let (inbox_tx, inbox) = mpsc::channel();
        let accepted: Arc<Mutex<HashMap<u64, TcpStream>>> = Arc::default();
        let stop = Arc::new(AtomicBool::new(false));
        {
            let (tx, accepted, stop) = (inbox_tx.clone(), Arc::clone(&accepted), Arc::clone(&stop));
            let next = AtomicU64::new(1);
            thread::spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    match listener.accept() {
                        Ok((s, _)) => {
                            let k = next.fetch_add(1, Ordering::SeqCst);
                            let _ = s.set_nonblocking(false);
                            let _ = s.set_nodelay(true);
                            let Ok(w) = s.try_clone() else { continue };
                            accepted.lock().expect("accept table").insert(k, w);
                            reader(s, Conn::Accepted(k), tx.clone());
                        }
                        Err(e) if e.kind() == IoKind::WouldBlock => thread::sleep(Duration::from_millis(2)),
                        Err(_) => thread::sleep(Duration::from_millis(10)),
                    }
                }
            });
        }
        Ok(TcpEndpoint {
            peers: HashMap::new(),
            dialed: HashMap::new(),
            accepted,
            closed: HashSet::new(),
            inbox,
            inbox_tx,
            stop,
            local,
            connect_timeout: Duration::from_secs(5),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local
    }

    pub fn connect_to(&mut self, peers: HashMap<String, SocketAddr>) {
        self.peers = peers;
    }

    fn dial(&mut self, peer: &str) -> Result<&mut TcpStream, TransportError> {
        if !self.dialed.contains_key(peer) {
            let addr = *self.peers.get(peer).ok_or_else(|| TransportError::Unreachable(peer.to_string()))?;
            let deadline = Instant::now() + self.connect_timeout;
            let s = loop {
                match TcpStream::connect_timeout(&addr, Duration::from_millis(500)) {
                    Ok(s) => break s,
                    Err(_) if Instant::now() < deadline => thread::sleep(Duration::from_millis(20)),
                    Err(_) => return Err(TransportError::Unreachable(peer.to_string())),
                }
            };
            let _ = s.set_nodelay(true);
            let r = s.try_clone().map_err(|e| TransportError::Io(e.to_string()))?;
            reader(r, Conn::Peer(peer.to_string()), self.inbox_tx.clone());
            self.dialed.insert(peer.to_string(), s);
        }
        Ok(self.dialed.get_mut(peer).expect("just dialled"))
    }
}

impl Endpoint for TcpEndpoint {
    fn send(&mut self, to: &Conn, frame: &[u8]) -> Result<(), TransportError> {
        if self.closed.contains(to) {
            return Err(match to {
                Conn::Peer(p) => TransportError::Unreachable(p.clone()),
                Conn::Accepted(_) => TransportError::Closed,
            });
        }
        match to {
            Conn::Peer(p) => {
                let s = self.dial(p)?;
                write_frame(s, frame).map_err(|_| TransportError::Unreachable(p.clone()))
            }
            Conn::Accepted(k) => {
                let mut table = self.accepted.lock().expect("accept table");
                let s = table.get_mut(k).ok_or(TransportError::Closed)?;
                write_frame(s, frame).map_err(|e| TransportError::Io(e.to_string()))
            }
        }
    }

    fn recv(&mut self, timeout: Duration) -> Result<Option<(Conn, Vec<u8>)>, TransportError> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.inbox.recv_timeout(left) {
                Ok(Event::Frame(c, f)) => return Ok(Some((c, f))),
                Ok(Event::Closed(c)) => {
                    if let Conn::Accepted(k) = &c {
                        self.accepted.lock().expect("accept table").remove(k);
                    }
                    if let Conn::Peer(p) = &c {
                        self.dialed.remove(p);
                    }
                    self.closed.insert(c);
                }
                Err(RecvTimeoutError::Timeout) => return Ok(None),
                Err(RecvTimeoutError::Disconnected) => return Err(TransportError::Closed),
            }
        }
    }

    fn peer_alive(&self, peer: &str) -> bool {
        !self.closed.contains(&Conn::Peer(peer.to_string()))
    }
}

impl Drop for TcpEndpoint {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for s in self.dialed.values() {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Ok(t) = self.accepted.lock() {
            for s in t.values() {
                let _ = s.shutdown(Shutdown::Both);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loopback_routes_and_detects_death() {
        let mut eps = loopback(&["a".into(), "b".into()]);
        let mut a = eps.remove("a").unwrap();
        let mut b = eps.remove("b").unwrap();
        a.send(&Conn::Peer("b".into()), b"hi").unwrap();
        let (from, f) = b.recv(Duration::from_secs(1)).unwrap().unwrap();
        assert_eq!((from, f), (Conn::Peer("a".into()), b"hi".to_vec()));
        drop(b);
        assert!(!a.peer_alive("b"));
        assert!(a.send(&Conn::Peer("b".into()), b"x").is_err());
    }

    #[test]
    fn tcp_request_and_reply_share_a_connection() {
        let mut a = TcpEndpoint::bind("127.0.0.1:0").unwrap();
        let mut b = TcpEndpoint::bind("127.0.0.1:0").unwrap();
        a.connect_to([("b".to_string(), b.local_addr())].into_iter().collect());
        let frame = [0, 0, 0, 2, b'{', b'}'];
        a.send(&Conn::Peer("b".into()), &frame).unwrap();
        let (conn, got) = b.recv(Duration::from_secs(5)).unwrap().unwrap();
        assert_eq!(got, frame);
        assert!(matches!(conn, Conn::Accepted(_)));
        b.send(&conn, &frame).unwrap();
        let (back, _) = a.recv(Duration::from_secs(5)).unwrap().unwrap();
        assert_eq!(back, Conn::Peer("b".into()));
        drop(b);
        let deadline = Instant::now() + Duration::from_secs(5);
        while a.peer_alive("b") && Instant::now() < deadline {
            a.recv(Duration::from_millis(20)).unwrap();
        }
        assert!(!a.peer_alive("b"));
    }
}
