//! The distillation protocol run by two parties over a byte stream.
//!
//! Alice holds the simulated error frame; Bob holds only his measurement
//! outcomes. They agree on the scramble by exchanging a 64-bit seed, swap
//! their raw outcomes, and Alice announces the identified string.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Read, Write};
use std::sync::mpsc::{self, Receiver, Sender};

use serde::Serialize;
use thiserror::Error;

use crate::distill::{self, DistillConfig, DistillProtocol};
use crate::gf2::{BitString, Gf2Matrix};

pub const PROTOCOL_VERSION: u16 = 1;
pub const MAX_PAYLOAD: usize = 1 << 20;
pub const HEADER_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[repr(u8)]
pub enum Tag {
    Hello = 0x01,
    Seed = 0x02,
    SyndromeShare = 0x03,
    Ident = 0x04,
    Done = 0x05,
}

impl Tag {
    pub fn from_byte(b: u8) -> Result<Self, WireError> {
        Ok(match b {
            0x01 => Self::Hello,
            0x02 => Self::Seed,
            0x03 => Self::SyndromeShare,
            0x04 => Self::Ident,
            0x05 => Self::Done,
            other => return Err(WireError::UnknownTag(other)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    fn byte(self) -> u8 {
        match self {
            Self::Alice => 0,
            Self::Bob => 1,
        }
    }

    fn peer(self) -> Self {
        match self {
            Self::Alice => Self::Bob,
            Self::Bob => Self::Alice,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Alice => "alice",
            Self::Bob => "bob",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Message {
    Hello { version: u16, role: Role, n: u32, m: u32 },
    Seed(u64),
    SyndromeShare(BitString),
    /// `candidates` support elements matched; `identified` is set iff exactly one did.
    Ident { candidates: u32, identified: Option<BitString> },
    Done,
}

impl Message {
    pub fn tag(&self) -> Tag {
        match self {
            Self::Hello { .. } => Tag::Hello,
            Self::Seed(_) => Tag::Seed,
            Self::SyndromeShare(_) => Tag::SyndromeShare,
            Self::Ident { .. } => Tag::Ident,
            Self::Done => Tag::Done,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum WireError {
    #[error("unknown message tag 0x{0:02x}")]
    UnknownTag(u8),
    #[error("truncated frame: needed {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("payload length {0} exceeds the {MAX_PAYLOAD}-byte cap")]
    Overflow(usize),
    #[error("malformed {tag:?} payload: {reason}")]
    Malformed { tag: Tag, reason: String },
    #[error("transport closed")]
    Closed,
    #[error("transport error: {0}")]
    Io(String),
}

fn put_bits(out: &mut Vec<u8>, b: &BitString) {
    out.extend_from_slice(&(b.len() as u16).to_le_bytes());
    out.extend_from_slice(&b.to_bytes());
}

struct Cursor<'a> {
    tag: Tag,
    data: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn bad(&self, reason: impl Into<String>) -> WireError {
        WireError::Malformed {
            tag: self.tag,
            reason: reason.into(),
        }
    }

    fn take(&mut self, k: usize) -> Result<&'a [u8], WireError> {
        if self.data.len() < k {
            return Err(self.bad(format!("needs {k} more bytes, {} left", self.data.len())));
        }
        let (head, rest) = self.data.split_at(k);
        self.data = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bits(&mut self) -> Result<BitString, WireError> {
        let len = self.u16()? as usize;
        let bytes = self.take(len.div_ceil(8))?;
        BitString::from_bytes(len, bytes).ok_or_else(|| self.bad("padding bits beyond the length are set"))
    }

    fn finish(self) -> Result<(), WireError> {
        if self.data.is_empty() {
            Ok(())
        } else {
            Err(self.bad(format!("{} trailing bytes", self.data.len())))
        }
    }
}

pub fn encode(msg: &Message) -> Vec<u8> {
    let mut payload = Vec::new();
    match msg {
        Message::Hello { version, role, n, m } => {
            payload.extend_from_slice(&version.to_le_bytes());
            payload.push(role.byte());
            payload.extend_from_slice(&n.to_le_bytes());
            payload.extend_from_slice(&m.to_le_bytes());
        }
        Message::Seed(seed) => payload.extend_from_slice(&seed.to_le_bytes()),
        Message::SyndromeShare(bits) => put_bits(&mut payload, bits),
        Message::Ident { candidates, identified } => {
            payload.push(identified.is_some() as u8);
            payload.extend_from_slice(&candidates.to_le_bytes());
            if let Some(x) = identified {
                put_bits(&mut payload, x);
            }
        }
        Message::Done => {}
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.push(msg.tag() as u8);
    out.extend_from_slice(&payload);
    out
}

fn decode_payload(tag: Tag, data: &[u8]) -> Result<Message, WireError> {
    let mut c = Cursor { tag, data };
    let msg = match tag {
        Tag::Hello => {
            let version = c.u16()?;
            let role = match c.u8()? {
                0 => Role::Alice,
                1 => Role::Bob,
                r => return Err(c.bad(format!("unknown role byte {r}"))),
            };
            Message::Hello {
                version,
                role,
                n: c.u32()?,
                m: c.u32()?,
            }
        }
        Tag::Seed => Message::Seed(c.u64()?),
        Tag::SyndromeShare => Message::SyndromeShare(c.bits()?),
        Tag::Ident => {
            let status = c.u8()?;
            let candidates = c.u32()?;
            let identified = match status {
                0 => None,
                1 => Some(c.bits()?),
                s => return Err(c.bad(format!("unknown status byte {s}"))),
            };
            Message::Ident { candidates, identified }
        }
        Tag::Done => Message::Done,
    };
    c.finish()?;
    Ok(msg)
}

fn parse_header(header: &[u8; HEADER_LEN]) -> Result<(usize, Tag), WireError> {
    let len = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(WireError::Overflow(len));
    }
    Ok((len, Tag::from_byte(header[4])?))
}

/// Decodes one frame from the front of `bytes`, returning it and the bytes consumed.
pub fn decode(bytes: &[u8]) -> Result<(Message, usize), WireError> {
    let header: &[u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .and_then(|h| h.try_into().ok())
        .ok_or(WireError::Truncated {
            needed: HEADER_LEN,
            got: bytes.len(),
        })?;
    let (len, tag) = parse_header(header)?;
    let total = HEADER_LEN + len;
    if bytes.len() < total {
        return Err(WireError::Truncated {
            needed: total,
            got: bytes.len(),
        });
    }
    Ok((decode_payload(tag, &bytes[HEADER_LEN..total])?, total))
}

fn read_full<R: Read + ?Sized>(r: &mut R, buf: &mut [u8]) -> Result<usize, WireError> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(WireError::Io(e.to_string())),
        }
    }
    Ok(got)
}

/// Reads one frame. A stream that ends cleanly before a header is `Closed`.
pub fn read_message<R: Read + ?Sized>(r: &mut R) -> Result<(Message, Vec<u8>), WireError> {
    let mut header = [0u8; HEADER_LEN];
    match read_full(r, &mut header)? {
        0 => return Err(WireError::Closed),
        HEADER_LEN => {}
        got => return Err(WireError::Truncated { needed: HEADER_LEN, got }),
    }
    let (len, tag) = parse_header(&header)?;
    let mut frame = vec![0u8; HEADER_LEN + len];
    frame[..HEADER_LEN].copy_from_slice(&header);
    let got = read_full(r, &mut frame[HEADER_LEN..])?;
    if got < len {
        return Err(WireError::Truncated {
            needed: HEADER_LEN + len,
            got: HEADER_LEN + got,
        });
    }
    let msg = decode_payload(tag, &frame[HEADER_LEN..])?;
    Ok((msg, frame))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Handshake,
    Scramble,
    Measure,
    Identify,
    Correct,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub direction: Direction,
    pub tag: Tag,
    pub frame_hex: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbortReason {
    VersionMismatch { ours: u16, theirs: u16 },
    ConfigMismatch { field: String, ours: u64, theirs: u64 },
    ProtocolViolation { phase: Phase, expected: Tag, got: Tag },
    Wire { phase: Phase, error: WireError },
    TransportClosed { phase: Phase },
    Engine { reason: String },
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::VersionMismatch { ours, theirs } => write!(f, "version mismatch: ours {ours}, peer {theirs}"),
            Self::ConfigMismatch { field, ours, theirs } => {
                write!(f, "config mismatch on {field}: ours {ours}, peer {theirs}")
            }
            Self::ProtocolViolation { phase, expected, got } => {
                write!(f, "protocol violation in {phase:?} phase: expected {expected:?}, got {got:?}")
            }
            Self::Wire { phase, error } => write!(f, "wire error in {phase:?} phase: {error}"),
            Self::TransportClosed { phase } => write!(f, "transport closed in {phase:?} phase"),
            Self::Engine { reason } => write!(f, "engine error: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PartyStatus {
    Completed,
    Aborted { reason: AbortReason },
}

/// What one party knows at the end of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PartyView {
    pub n: usize,
    pub m: usize,
    pub scramble_seed: Option<u64>,
    pub scramble: Option<Gf2Matrix>,
    /// Known to Alice only.
    pub hidden_x: Option<BitString>,
    pub y_a: Option<BitString>,
    pub y_b: Option<BitString>,
    pub syndrome: Option<BitString>,
    pub candidates: Option<usize>,
    pub identified_x: Option<BitString>,
    /// Alice: whether the identified string equals the hidden one. Bob: whether
    /// a unique string was announced.
    pub success: Option<bool>,
    pub ebits_out: usize,
    pub wire_bytes_sent: u64,
    pub wire_bytes_received: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartyRun {
    pub role: Role,
    pub status: PartyStatus,
    pub phase_reached: Phase,
    pub transcript: Vec<TranscriptEntry>,
    pub view: PartyView,
}

impl PartyRun {
    pub fn completed(&self) -> bool {
        self.status == PartyStatus::Completed
    }

    /// The concatenation of every frame in order, sent and received.
    pub fn transcript_bytes(&self) -> Vec<u8> {
        self.transcript
            .iter()
            .flat_map(|e| crate::gf2::hex_decode(&e.frame_hex).expect("transcript hex is well formed"))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("party run serializes")
    }
}

/// Upper bound on wire bits for one run: fixed framing and handshake, the
/// 64-bit seed, two `m`-bit shares and one `n`-bit identification.
pub fn wire_bit_cap(n: usize, m: usize) -> u64 {
    let frames = 2 * 6 * HEADER_LEN as u64;
    let hello = 2 * 11;
    let shares = 2 * (2 + m.div_ceil(8) as u64);
    let ident = 5 + 2 + n.div_ceil(8) as u64;
    8 * (frames + hello + 8 + shares + ident)
}

struct Party<'t, T: Read + Write + ?Sized> {
    role: Role,
    transport: &'t mut T,
    phase: Phase,
    transcript: Vec<TranscriptEntry>,
    view: PartyView,
}

impl<T: Read + Write + ?Sized> Party<'_, T> {
    fn send(&mut self, msg: &Message) -> Result<(), AbortReason> {
        let frame = encode(msg);
        self.transport
            .write_all(&frame)
            .and_then(|_| self.transport.flush())
            .map_err(|_| AbortReason::TransportClosed { phase: self.phase })?;
        self.view.wire_bytes_sent += frame.len() as u64;
        self.transcript.push(TranscriptEntry {
            direction: Direction::Sent,
            tag: msg.tag(),
            frame_hex: crate::gf2::hex_encode(&frame),
        });
        Ok(())
    }

    fn expect(&mut self, expected: Tag) -> Result<Message, AbortReason> {
        let (msg, frame) = read_message(self.transport).map_err(|error| match error {
            WireError::Closed => AbortReason::TransportClosed { phase: self.phase },
            error => AbortReason::Wire { phase: self.phase, error },
        })?;
        self.view.wire_bytes_received += frame.len() as u64;
        self.transcript.push(TranscriptEntry {
            direction: Direction::Received,
            tag: msg.tag(),
            frame_hex: crate::gf2::hex_encode(&frame),
        });
        if msg.tag() != expected {
            return Err(AbortReason::ProtocolViolation {
                phase: self.phase,
                expected,
                got: msg.tag(),
            });
        }
        Ok(msg)
    }

    fn hello(&self) -> Message {
        Message::Hello {
            version: PROTOCOL_VERSION,
            role: self.role,
            n: self.view.n as u32,
            m: self.view.m as u32,
        }
    }

    fn check_hello(&mut self) -> Result<(), AbortReason> {
        let Message::Hello { version, role, n, m } = self.expect(Tag::Hello)? else {
            unreachable!()
        };
        if version != PROTOCOL_VERSION {
            return Err(AbortReason::VersionMismatch {
                ours: PROTOCOL_VERSION,
                theirs: version,
            });
        }
        let mismatch = |field: &str, ours: u64, theirs: u64| AbortReason::ConfigMismatch {
            field: field.into(),
            ours,
            theirs,
        };
        if role != self.role.peer() {
            return Err(mismatch("role", self.role.peer().byte() as u64, role.byte() as u64));
        }
        if n as usize != self.view.n {
            return Err(mismatch("n", self.view.n as u64, n as u64));
        }
        if m as usize != self.view.m {
            return Err(mismatch("m", self.view.m as u64, m as u64));
        }
        Ok(())
    }

    fn share(&mut self) -> Result<BitString, AbortReason> {
        let Message::SyndromeShare(y) = self.expect(Tag::SyndromeShare)? else {
            unreachable!()
        };
        if y.len() != self.view.m {
            return Err(AbortReason::Wire {
                phase: self.phase,
                error: WireError::Malformed {
                    tag: Tag::SyndromeShare,
                    reason: format!("share has {} bits, expected {}", y.len(), self.view.m),
                },
            });
        }
        Ok(y)
    }

    fn run_alice(&mut self, protocol: &DistillProtocol, seed: u64) -> Result<(), AbortReason> {
        let engine = |e: distill::DistillError| AbortReason::Engine { reason: e.to_string() };
        let (n, m) = (self.view.n, self.view.m);
        self.send(&self.hello())?;
        self.check_hello()?;

        self.phase = Phase::Scramble;
        self.send(&Message::Seed(seed))?;
        let scramble = distill::derive_scramble(n, seed).map_err(|e| engine(e.into()))?;
        let support = &protocol.config().support;
        let hidden = support[distill::derive_hidden_index(support.len(), seed)].clone();
        self.view.scramble_seed = Some(seed);

        self.phase = Phase::Measure;
        let frame = scramble.mul_vec(&hidden).map_err(|e| engine(e.into()))?;
        let y_a = &distill::derive_shared_outcomes(m, seed) ^ &frame.prefix(m);
        self.send(&Message::SyndromeShare(y_a.clone()))?;
        let y_b = self.share()?;
        let syndrome = &y_a ^ &y_b;

        self.phase = Phase::Identify;
        let ident = protocol.identify(&scramble, &syndrome).map_err(|e| engine(e.into()))?;
        self.send(&Message::Ident {
            candidates: ident.candidates as u32,
            identified: ident.identified.clone(),
        })?;

        self.phase = Phase::Correct;
        let success = ident.identified.as_ref() == Some(&hidden);
        self.view.scramble = Some(scramble);
        self.view.hidden_x = Some(hidden);
        self.view.y_a = Some(y_a);
        self.view.y_b = Some(y_b);
        self.view.syndrome = Some(syndrome);
        self.view.candidates = Some(ident.candidates);
        self.view.identified_x = ident.identified;
        self.view.success = Some(success);
        self.view.ebits_out = if success { n - m } else { 0 };

        self.send(&Message::Done)?;
        self.expect(Tag::Done)?;
        self.phase = Phase::Done;
        Ok(())
    }

    fn run_bob(&mut self, protocol: &DistillProtocol) -> Result<(), AbortReason> {
        let engine = |e: distill::DistillError| AbortReason::Engine { reason: e.to_string() };
        let (n, m) = (self.view.n, self.view.m);
        // reply before validating so a mismatched peer sees our parameters
        let first = self.expect(Tag::Hello);
        self.send(&self.hello())?;
        let Message::Hello { version, role, n: pn, m: pm } = first? else {
            unreachable!()
        };
        if version != PROTOCOL_VERSION {
            return Err(AbortReason::VersionMismatch {
                ours: PROTOCOL_VERSION,
                theirs: version,
            });
        }
        for (field, ours, theirs) in [
            ("role", Role::Alice.byte() as u64, role.byte() as u64),
            ("n", n as u64, pn as u64),
            ("m", m as u64, pm as u64),
        ] {
            if ours != theirs {
                return Err(AbortReason::ConfigMismatch {
                    field: field.into(),
                    ours,
                    theirs,
                });
            }
        }

        self.phase = Phase::Scramble;
        let Message::Seed(seed) = self.expect(Tag::Seed)? else {
            unreachable!()
        };
        let scramble = distill::derive_scramble(n, seed).map_err(|e| engine(e.into()))?;
        self.view.scramble_seed = Some(seed);

        self.phase = Phase::Measure;
        let y_b = distill::derive_shared_outcomes(m, seed);
        let y_a = self.share()?;
        self.send(&Message::SyndromeShare(y_b.clone()))?;
        let syndrome = &y_a ^ &y_b;

        self.phase = Phase::Identify;
        let Message::Ident { candidates, identified } = self.expect(Tag::Ident)? else {
            unreachable!()
        };
        if let Some(x) = &identified {
            if !protocol.config().support.contains(x) {
                return Err(AbortReason::Wire {
                    phase: self.phase,
                    error: WireError::Malformed {
                        tag: Tag::Ident,
                        reason: format!("identified string {} is not in the support", x.to_hex()),
                    },
                });
            }
        }

        self.phase = Phase::Correct;
        let success = identified.is_some();
        self.view.scramble = Some(scramble);
        self.view.y_a = Some(y_a);
        self.view.y_b = Some(y_b);
        self.view.syndrome = Some(syndrome);
        self.view.candidates = Some(candidates as usize);
        self.view.identified_x = identified;
        self.view.success = Some(success);
        self.view.ebits_out = if success { n - m } else { 0 };

        self.expect(Tag::Done)?;
        self.send(&Message::Done)?;
        self.phase = Phase::Done;
        Ok(())
    }
}

/// Runs one party to completion or a structured abort. `seed` is the scramble
/// seed Alice sends; Bob ignores it.
pub fn run_party<T: Read + Write + ?Sized>(
    role: Role,
    transport: &mut T,
    cfg: &DistillConfig,
    seed: u64,
) -> PartyRun {
    let protocol = match DistillProtocol::new(cfg.clone()) {
        Ok(p) => p,
        Err(e) => {
            return PartyRun {
                role,
                status: PartyStatus::Aborted {
                    reason: AbortReason::Engine { reason: e.to_string() },
                },
                phase_reached: Phase::Handshake,
                transcript: Vec::new(),
                view: PartyView::default(),
            }
        }
    };
    let mut party = Party {
        role,
        transport,
        phase: Phase::Handshake,
        transcript: Vec::new(),
        view: PartyView {
            n: protocol.n(),
            m: protocol.m(),
            ..PartyView::default()
        },
    };
    let result = match role {
        Role::Alice => party.run_alice(&protocol, seed),
        Role::Bob => party.run_bob(&protocol),
    };
    PartyRun {
        role,
        status: match result {
            Ok(()) => PartyStatus::Completed,
            Err(reason) => PartyStatus::Aborted { reason },
        },
        phase_reached: party.phase,
        transcript: party.transcript,
        view: party.view,
    }
}

/// One end of an in-memory reliable ordered byte stream.
pub struct PipeEnd {
    tx: Option<Sender<Vec<u8>>>,
    rx: Receiver<Vec<u8>>,
    buf: VecDeque<u8>,
}

/// A connected pair of in-memory byte streams.
pub fn duplex() -> (PipeEnd, PipeEnd) {
    let (tx_a, rx_b) = mpsc::channel();
    let (tx_b, rx_a) = mpsc::channel();
    (
        PipeEnd {
            tx: Some(tx_a),
            rx: rx_a,
            buf: VecDeque::new(),
        },
        PipeEnd {
            tx: Some(tx_b),
            rx: rx_b,
            buf: VecDeque::new(),
        },
    )
}

impl PipeEnd {
    /// Closes the sending direction; the peer reads end-of-stream.
    pub fn close(&mut self) {
        self.tx = None;
    }
}

impl Read for PipeEnd {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        if self.buf.is_empty() {
            match self.rx.recv() {
                Ok(chunk) => self.buf.extend(chunk),
                Err(_) => return Ok(0),
            }
        }
        let k = out.len().min(self.buf.len());
        for (o, b) in out.iter_mut().zip(self.buf.drain(..k)) {
            *o = b;
        }
        Ok(k)
    }
}

impl Write for PipeEnd {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        let tx = self.tx.as_ref().ok_or_else(|| io::Error::from(io::ErrorKind::BrokenPipe))?;
        tx.send(data.to_vec())
            .map_err(|_| io::Error::from(io::ErrorKind::BrokenPipe))?;
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Replays fixed incoming bytes and records everything written.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTransport {
    incoming: io::Cursor<Vec<u8>>,
    pub written: Vec<u8>,
}

impl ScriptedTransport {
    pub fn new(incoming: Vec<u8>) -> Self {
        Self {
            incoming: io::Cursor::new(incoming),
            written: Vec::new(),
        }
    }

    pub fn from_messages(msgs: &[Message]) -> Self {
        Self::new(msgs.iter().flat_map(encode).collect())
    }
}

impl Read for ScriptedTransport {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        self.incoming.read(out)
    }
}

impl Write for ScriptedTransport {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        self.written.extend_from_slice(data);
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Runs Alice and Bob concurrently over an in-memory pipe.
pub fn run_loopback(cfg: &DistillConfig, seed: u64) -> (PartyRun, PartyRun) {
    run_loopback_with(cfg, cfg, seed)
}

/// Like [`run_loopback`] but lets the two parties hold different configurations.
pub fn run_loopback_with(alice_cfg: &DistillConfig, bob_cfg: &DistillConfig, seed: u64) -> (PartyRun, PartyRun) {
    let (mut a, mut b) = duplex();
    std::thread::scope(|s| {
        let bob = s.spawn(move || {
            let run = run_party(Role::Bob, &mut b, bob_cfg, 0);
            drop(b);
            run
        });
        let alice = run_party(Role::Alice, &mut a, alice_cfg, seed);
        drop(a);
        (alice, bob.join().expect("bob thread panicked"))
    })
}
