use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::wire::{ProtocolMessage, WireError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("party {peer} disconnected")]
    Disconnected { peer: usize },
    #[error("no link to party {0}")]
    InvalidPeer(usize),
    #[error("malformed frame from party {peer}: {error}")]
    Wire { peer: usize, error: WireError },
    #[error("connection setup failed: {0}")]
    Setup(String),
}

/// Point-to-point FIFO links from one party to every other party.
pub trait Transport: Send {
    fn party(&self) -> usize;
    fn parties(&self) -> usize;
    fn send(&mut self, to: usize, message: &ProtocolMessage) -> Result<(), TransportError>;
    fn recv(&mut self, from: usize) -> Result<ProtocolMessage, TransportError>;
    /// Tears down every link so blocked peers observe a disconnect.
    fn close(&mut self) {}
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn party(&self) -> usize {
        (**self).party()
    }
    fn parties(&self) -> usize {
        (**self).parties()
    }
    fn send(&mut self, to: usize, message: &ProtocolMessage) -> Result<(), TransportError> {
        (**self).send(to, message)
    }
    fn recv(&mut self, from: usize) -> Result<ProtocolMessage, TransportError> {
        (**self).recv(from)
    }
    fn close(&mut self) {
        (**self).close()
    }
}

/// In-process links. Frames are encoded to bytes and decoded on receipt,
/// exactly as over a socket.
pub struct ChannelTransport {
    party: usize,
    outgoing: Vec<Option<Sender<Vec<u8>>>>,
    incoming: Vec<Option<Receiver<Vec<u8>>>>,
}

/// Fully connected in-process links for `t` parties.
pub fn channel_mesh(t: usize) -> Vec<ChannelTransport> {
    let mut outgoing: Vec<Vec<Option<Sender<Vec<u8>>>>> = (0..t).map(|_| (0..t).map(|_| None).collect()).collect();
    let mut incoming: Vec<Vec<Option<Receiver<Vec<u8>>>>> = (0..t).map(|_| (0..t).map(|_| None).collect()).collect();
    for from in 0..t {
        for to in 0..t {
            if from != to {
                let (tx, rx) = channel();
                outgoing[from][to] = Some(tx);
                incoming[to][from] = Some(rx);
            }
        }
    }
    outgoing
        .into_iter()
        .zip(incoming)
        .enumerate()
        .map(|(party, (outgoing, incoming))| ChannelTransport {
            party,
            outgoing,
            incoming,
        })
        .collect()
}

impl Transport for ChannelTransport {
    fn party(&self) -> usize {
        self.party
    }

    fn parties(&self) -> usize {
        self.outgoing.len()
    }

    fn send(&mut self, to: usize, message: &ProtocolMessage) -> Result<(), TransportError> {
        let link = self
            .outgoing
            .get(to)
            .and_then(Option::as_ref)
            .ok_or(TransportError::InvalidPeer(to))?;
        link.send(message.encode())
            .map_err(|_| TransportError::Disconnected { peer: to })
    }

    fn recv(&mut self, from: usize) -> Result<ProtocolMessage, TransportError> {
        let link = self
            .incoming
            .get(from)
            .and_then(Option::as_ref)
            .ok_or(TransportError::InvalidPeer(from))?;
        let frame = link.recv().map_err(|_| TransportError::Disconnected { peer: from })?;
        ProtocolMessage::decode(&frame).map_err(|error| TransportError::Wire { peer: from, error })
    }

    fn close(&mut self) {
        self.outgoing.iter_mut().for_each(|l| *l = None);
        self.incoming.iter_mut().for_each(|l| *l = None);
    }
}

type Inbox = Receiver<Result<ProtocolMessage, WireError>>;

/// TCP links. Each connection gets a reader thread that drains the socket
/// into a queue, so two parties sending large frames to each other at the
/// same time cannot deadlock on full socket buffers.
pub struct TcpTransport {
    party: usize,
    writers: Vec<Option<BufWriter<TcpStream>>>,
    inboxes: Vec<Option<Inbox>>,
}

const CONNECT_TIMEOUT: Duration = Duration::from_secs(10);

fn setup<E: std::fmt::Display>(e: E) -> TransportError {
    TransportError::Setup(e.to_string())
}

impl TcpTransport {
    /// Connects `party` to all peers. Party `i` dials every lower-numbered
    /// party and accepts connections from the higher-numbered ones; each
    /// dialer first sends its party index as a 4-byte big-endian integer.
    pub fn establish(party: usize, listener: TcpListener, peers: &[SocketAddr]) -> Result<Self, TransportError> {
        let t = peers.len();
        if party >= t {
            return Err(TransportError::InvalidPeer(party));
        }
        let mut streams: Vec<Option<TcpStream>> = (0..t).map(|_| None).collect();
        for (peer, addr) in peers.iter().enumerate().take(party) {
            let deadline = Instant::now() + CONNECT_TIMEOUT;
            let mut stream = loop {
                match TcpStream::connect(addr) {
                    Ok(s) => break s,
                    Err(e) if Instant::now() >= deadline => return Err(setup(e)),
                    Err(_) => thread::sleep(Duration::from_millis(20)),
                }
            };
            stream.write_all(&(party as u32).to_be_bytes()).map_err(setup)?;
            streams[peer] = Some(stream);
        }
        for _ in party + 1..t {
            let (mut stream, _) = listener.accept().map_err(setup)?;
            let mut prelude = [0u8; 4];
            stream.read_exact(&mut prelude).map_err(setup)?;
            let peer = u32::from_be_bytes(prelude) as usize;
            if peer <= party || peer >= t || streams[peer].is_some() {
                return Err(TransportError::Setup(format!("unexpected peer index {peer}")));
            }
            streams[peer] = Some(stream);
        }

        let mut writers = Vec::with_capacity(t);
        let mut inboxes = Vec::with_capacity(t);
        for stream in streams {
            match stream {
                None => {
                    writers.push(None);
                    inboxes.push(None);
                }
                Some(stream) => {
                    stream.set_nodelay(true).map_err(setup)?;
                    let reader = stream.try_clone().map_err(setup)?;
                    let (tx, rx) = channel();
                    thread::spawn(move || {
                        let mut reader = BufReader::new(reader);
                        loop {
                            let msg = ProtocolMessage::read_from(&mut reader);
                            let stop = msg.is_err();
                            if tx.send(msg).is_err() || stop {
                                break;
                            }
                        }
                    });
                    writers.push(Some(BufWriter::new(stream)));
                    inboxes.push(Some(rx));
                }
            }
        }
        Ok(TcpTransport {
            party,
            writers,
            inboxes,
        })
    }
}

impl Transport for TcpTransport {
    fn party(&self) -> usize {
        self.party
    }

    fn parties(&self) -> usize {
        self.writers.len()
    }

    fn send(&mut self, to: usize, message: &ProtocolMessage) -> Result<(), TransportError> {
        let w = self
            .writers
            .get_mut(to)
            .and_then(Option::as_mut)
            .ok_or(TransportError::InvalidPeer(to))?;
        message
            .write_to(w)
            .and_then(|_| w.flush().map_err(WireError::from))
            .map_err(|_| TransportError::Disconnected { peer: to })
    }

    fn recv(&mut self, from: usize) -> Result<ProtocolMessage, TransportError> {
        let inbox = self
            .inboxes
            .get(from)
            .and_then(Option::as_ref)
            .ok_or(TransportError::InvalidPeer(from))?;
        match inbox.recv() {
            Ok(Ok(msg)) => Ok(msg),
            Ok(Err(WireError::Closed | WireError::Io(_))) | Err(_) => Err(TransportError::Disconnected { peer: from }),
            Ok(Err(error)) => Err(TransportError::Wire { peer: from, error }),
        }
    }

    fn close(&mut self) {
        for w in self.writers.iter_mut().flatten() {
            let _ = w.flush();
            let _ = w.get_ref().shutdown(std::net::Shutdown::Both);
        }
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        self.close();
    }
}

/// Fully connected TCP links for `t` parties on loopback ports.
pub fn tcp_mesh(t: usize) -> Result<Vec<TcpTransport>, TransportError> {
    let listeners = (0..t)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<Result<Vec<_>, _>>()
        .map_err(setup)?;
    let addrs = listeners
        .iter()
        .map(TcpListener::local_addr)
        .collect::<Result<Vec<_>, _>>()
        .map_err(setup)?;
    let handles: Vec<_> = listeners
        .into_iter()
        .enumerate()
        .map(|(party, listener)| {
            let addrs = addrs.clone();
            thread::spawn(move || TcpTransport::establish(party, listener, &addrs))
        })
        .collect();
    handles
        .into_iter()
        .map(|h| {
            h.join()
                .map_err(|_| TransportError::Setup("setup thread panicked".into()))?
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_share::FieldElement;
    use crate::runtime::wire::{MessageKind, SessionId};

    fn msg(round: u32, len: usize) -> ProtocolMessage {
        ProtocolMessage::new(
            SessionId([1; 16]),
            round,
            MessageKind::OpenValue,
            (0..len as u64).map(FieldElement::new).collect(),
        )
    }

    fn exchange_all(mut mesh: Vec<impl Transport + 'static>, len: usize) {
        let handles: Vec<_> = mesh
            .drain(..)
            .map(|mut tr| {
                thread::spawn(move || {
                    let me = tr.party();
                    for round in 0..3 {
                        for p in (0..tr.parties()).filter(|p| *p != me) {
                            tr.send(p, &msg(round, len)).unwrap();
                        }
                        for p in (0..tr.parties()).filter(|p| *p != me) {
                            assert_eq!(tr.recv(p).unwrap(), msg(round, len));
                        }
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn channel_mesh_is_fifo() {
        exchange_all(channel_mesh(3), 10);
    }

    #[test]
    fn tcp_mesh_handles_large_simultaneous_frames() {
        exchange_all(tcp_mesh(3).unwrap(), 200_000);
    }

    #[test]
    fn dropped_peer_is_reported() {
        let mut mesh = channel_mesh(2);
        let b = mesh.pop().unwrap();
        drop(b);
        let mut a = mesh.pop().unwrap();
        assert_eq!(a.recv(1).unwrap_err(), TransportError::Disconnected { peer: 1 });

        let mut mesh = tcp_mesh(2).unwrap();
        drop(mesh.pop());
        assert_eq!(mesh[0].recv(1).unwrap_err(), TransportError::Disconnected { peer: 1 });

        let mut mesh = channel_mesh(3);
        mesh[2].close();
        assert_eq!(mesh[0].recv(2).unwrap_err(), TransportError::Disconnected { peer: 2 });
        assert!(mesh[2].send(0, &msg(0, 1)).is_err());
    }
}
