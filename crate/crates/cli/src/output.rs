//! Fix publication: newline-delimited sentences over TCP or a serial device
//! path. Slow TCP consumers are dropped rather than back-pressuring the
//! pipeline; fixes are superseded every ping anyway.

use std::fs::OpenOptions;
use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::{Arc, Mutex};

pub enum FixSink {
    None,
    Tcp(TcpBroadcast),
    Serial(std::fs::File),
}

impl FixSink {
    pub fn none() -> Self {
        FixSink::None
    }

    pub fn tcp(port: u16) -> std::io::Result<Self> {
        Ok(FixSink::Tcp(TcpBroadcast::bind(port)?))
    }

    pub fn serial(path: &Path) -> std::io::Result<Self> {
        Ok(FixSink::Serial(OpenOptions::new().write(true).open(path)?))
    }

    pub fn publish(&mut self, line: &str) {
        match self {
            FixSink::None => {}
            FixSink::Tcp(broadcast) => broadcast.publish(line),
            FixSink::Serial(file) => {
                // A wedged serial device should not stall the ping loop.
                let _ = file.write_all(line.as_bytes());
                let _ = file.flush();
            }
        }
    }
}

pub struct TcpBroadcast {
    clients: Arc<Mutex<Vec<TcpStream>>>,
    pub local_port: u16,
}

impl TcpBroadcast {
    pub fn bind(port: u16) -> std::io::Result<Self> {
        let listener = TcpListener::bind(("0.0.0.0", port))?;
        let local_port = listener.local_addr()?.port();
        let clients: Arc<Mutex<Vec<TcpStream>>> = Arc::new(Mutex::new(Vec::new()));
        let accept_list = Arc::clone(&clients);
        std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                stream.set_nonblocking(true).ok();
                accept_list.lock().unwrap().push(stream);
            }
        });
        Ok(Self { clients, local_port })
    }

    pub fn publish(&self, line: &str) {
        let mut clients = self.clients.lock().unwrap();
        clients.retain_mut(|stream| match stream.write_all(line.as_bytes()) {
            Ok(()) => true,
            // WouldBlock means the consumer is behind; drop it.
            Err(_) => false,
        });
    }
}
