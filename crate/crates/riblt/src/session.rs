//! Two-party synchronization.
//!
//! The responder streams header + cells at line rate and never reads a byte
//! back; the requester decodes as cells arrive and simply closes the
//! transport once reconciliation completes. That close is the only feedback
//! in the protocol: the responder treats any write failure as the peer
//! having finished.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::sync::{Arc, Mutex};
use std::thread;

use crate::decoder::{Decoder, Reconciliation};
use crate::encoder::{Encoder, EncoderMode};
use crate::error::{Error, Result};
use crate::mapping::MappingProfile;
use crate::symbol::{HashKey, Item};
use crate::wire;

/// Per-endpoint session parameters. One profile and key per invocation;
/// there is no in-band negotiation.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub item_len: usize,
    pub profile: MappingProfile,
    pub key: HashKey,
}

impl SessionConfig {
    pub fn new(item_len: usize) -> Self {
        SessionConfig {
            item_len,
            profile: MappingProfile::regular(),
            key: HashKey::default(),
        }
    }

    pub fn with_profile(mut self, profile: MappingProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_key(mut self, key: HashKey) -> Self {
        self.key = key;
        self
    }
}

fn write_one_cell<W: Write>(
    w: &mut W,
    encoder: &Mutex<Encoder>,
    i: u64,
    set_size: u64,
    profile: &MappingProfile,
) -> Result<()> {
    let cell = encoder.lock().unwrap().symbol_at(i)?;
    wire::write_cell(w, &cell, i, set_size, profile)?;
    Ok(())
}

/// Stream header + cells for `items` until the sink stops accepting bytes.
/// Returns the number of cells streamed; a failed write is the normal end
/// of a session, not an error.
pub fn respond<W: Write>(config: &SessionConfig, items: Vec<Item>, sink: W) -> Result<u64> {
    let encoder = Encoder::with_items(
        config.item_len,
        config.profile.clone(),
        config.key,
        EncoderMode::Cached,
        items,
    )?;
    respond_with_encoder(&Mutex::new(encoder), sink)
}

/// [`respond`] from a shared cached encoder, so many sessions serve the
/// identical stream without re-encoding.
pub fn respond_with_encoder<W: Write>(encoder: &Mutex<Encoder>, mut sink: W) -> Result<u64> {
    let (header, profile) = {
        let enc = encoder.lock().unwrap();
        (
            wire::StreamHeader {
                item_len: enc.item_len(),
                set_size: enc.len() as u64,
                irregular: enc.profile().is_irregular(),
            },
            enc.profile().clone(),
        )
    };

    if wire::write_header(&mut sink, &header).is_err() {
        return Ok(0);
    }
    let mut streamed = 0u64;
    loop {
        match write_one_cell(&mut sink, encoder, streamed, header.set_size, &profile) {
            Ok(()) => streamed += 1,
            Err(Error::Io(_)) => return Ok(streamed), // peer closed
            Err(e) => return Err(e),
        }
        if sink.flush().is_err() {
            return Ok(streamed);
        }
    }
}

/// Consume a responder's stream until the local decoder completes, then
/// return the recovered difference and the number of cells consumed. The
/// caller closes the transport by dropping `source`.
pub fn request<R: Read>(
    config: &SessionConfig,
    local_items: Vec<Item>,
    mut source: R,
) -> Result<(Reconciliation, u64)> {
    let header = match wire::read_header(&mut source) {
        Ok(h) => h,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
            return Err(Error::Incomplete)
        }
        Err(e) => return Err(e),
    };
    if header.item_len != config.item_len {
        return Err(Error::HeaderMismatch(format!(
            "item length {} differs from ours ({})",
            header.item_len, config.item_len
        )));
    }
    if header.irregular != config.profile.is_irregular() {
        return Err(Error::HeaderMismatch(
            "mapping profile kind differs between peers".into(),
        ));
    }

    let mut decoder = Decoder::with_local_set(
        config.item_len,
        config.profile.clone(),
        config.key,
        local_items,
    )?;
    let mut consumed = 0u64;
    loop {
        let cell = match wire::read_cell(
            &mut source,
            consumed,
            header.set_size,
            header.item_len,
            &config.profile,
        ) {
            Ok(c) => c,
            Err(Error::Io(e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
                return Err(Error::Incomplete)
            }
            Err(e) => return Err(e),
        };
        decoder.ingest(&cell)?;
        consumed += 1;
        if decoder.is_complete() {
            return Ok((decoder.result()?, consumed));
        }
    }
}

/// One session entirely in-process, over a bounded byte pipe. The responder
/// runs on its own thread; dropping the requester's end after decoding is
/// what terminates it.
pub fn sync_loopback(
    config: &SessionConfig,
    remote_items: Vec<Item>,
    local_items: Vec<Item>,
) -> Result<(Reconciliation, u64)> {
    let (writer, reader) = byte_pipe(1024);
    let responder_cfg = config.clone();
    let responder = thread::spawn(move || respond(&responder_cfg, remote_items, writer));
    let outcome = request(config, local_items, reader);
    // Reader is dropped once request returns, which ends the responder.
    let _ = responder.join();
    outcome
}

/// TCP responder: accepts connections and streams the shared cached encoder
/// to each, one session per connection.
pub struct TcpResponder {
    listener: TcpListener,
    encoder: Arc<Mutex<Encoder>>,
}

impl TcpResponder {
    pub fn bind<A: ToSocketAddrs>(
        addr: A,
        config: &SessionConfig,
        items: Vec<Item>,
    ) -> Result<Self> {
        let encoder = Encoder::with_items(
            config.item_len,
            config.profile.clone(),
            config.key,
            EncoderMode::Cached,
            items,
        )?;
        Ok(TcpResponder {
            listener: TcpListener::bind(addr)?,
            encoder: Arc::new(Mutex::new(encoder)),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accept and serve until the listener fails.
    pub fn serve_forever(&self) -> Result<()> {
        loop {
            let (stream, _) = self.listener.accept()?;
            let encoder = Arc::clone(&self.encoder);
            thread::spawn(move || {
                let sink = BufWriter::new(stream);
                let _ = respond_with_encoder(&encoder, sink);
            });
        }
    }
}

/// Connect to a responder, reconcile, and close.
pub fn sync_tcp<A: ToSocketAddrs>(
    addr: A,
    config: &SessionConfig,
    local_items: Vec<Item>,
) -> Result<(Reconciliation, u64)> {
    let stream = TcpStream::connect(addr)?;
    let outcome = request(config, local_items, BufReader::new(stream.try_clone()?));
    let _ = stream.shutdown(std::net::Shutdown::Both);
    outcome
}

/// Bounded in-process byte pipe. Writes fail once the reader is dropped;
/// reads return EOF once the writer is dropped and the buffer drains.
pub fn byte_pipe(capacity: usize) -> (PipeWriter, PipeReader) {
    let (tx, rx) = sync_channel(capacity);
    (
        PipeWriter { tx },
        PipeReader {
            rx,
            leftover: Vec::new(),
            offset: 0,
        },
    )
}

pub struct PipeWriter {
    tx: SyncSender<Vec<u8>>,
}

impl Write for PipeWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "reader closed"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

pub struct PipeReader {
    rx: Receiver<Vec<u8>>,
    leftover: Vec<u8>,
    offset: usize,
}

impl Read for PipeReader {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if self.offset == self.leftover.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.leftover = chunk;
                    self.offset = 0;
                }
                Err(_) => return Ok(0), // writer closed
            }
        }
        let n = buf.len().min(self.leftover.len() - self.offset);
        buf[..n].copy_from_slice(&self.leftover[self.offset..self.offset + n]);
        self.offset += n;
        Ok(n)
    }
}
