//! TCP editing service: one session per connection, single-line JSON frames.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use cagewarp_core::session::SessionConfig;
use log::{info, warn};
use serde::Serialize;
use serde_json::Value;

use crate::executor::{Executor, PendingRender};
use crate::protocol::{Ack, Cancelled, CommandMessage, FrameMessage, Hello, HelloReply, PROTOCOL_VERSION};

type Writer = Arc<Mutex<TcpStream>>;

fn send<T: Serialize>(writer: &Writer, msg: &T) -> io::Result<()> {
    let mut line = serde_json::to_vec(msg).expect("message serializes");
    line.push(b'\n');
    let mut w = writer.lock().unwrap_or_else(|e| e.into_inner());
    w.write_all(&line)?;
    w.flush()
}

/// Binds and serves on a background thread; returns the bound address.
pub fn spawn_server(
    bind: impl ToSocketAddrs,
    scene_root: PathBuf,
    config: SessionConfig,
) -> io::Result<(SocketAddr, JoinHandle<()>)> {
    let listener = TcpListener::bind(bind)?;
    let addr = listener.local_addr()?;
    let handle = thread::spawn(move || accept_loop(listener, scene_root, config));
    Ok((addr, handle))
}

/// Serves forever on the calling thread.
pub fn serve(bind: impl ToSocketAddrs, scene_root: PathBuf, config: SessionConfig) -> io::Result<()> {
    let listener = TcpListener::bind(bind)?;
    info!("listening on {}", listener.local_addr()?);
    accept_loop(listener, scene_root, config);
    Ok(())
}

fn accept_loop(listener: TcpListener, scene_root: PathBuf, config: SessionConfig) {
    for stream in listener.incoming() {
        match stream {
            Ok(stream) => {
                let root = scene_root.clone();
                thread::spawn(move || {
                    let peer = stream.peer_addr().ok();
                    if let Err(e) = handle_connection(stream, root, config) {
                        warn!("connection {peer:?} ended with error: {e}");
                    }
                });
            }
            Err(e) => warn!("accept failed: {e}"),
        }
    }
}

struct InFlight {
    cancel: Arc<AtomicBool>,
    handle: JoinHandle<()>,
}

impl InFlight {
    fn settle(self) {
        self.cancel.store(true, Ordering::Relaxed);
        let _ = self.handle.join();
    }
}

fn handle_connection(stream: TcpStream, scene_root: PathBuf, config: SessionConfig) -> io::Result<()> {
    let writer: Writer = Arc::new(Mutex::new(stream.try_clone()?));
    let mut lines = BufReader::new(stream).lines();

    let Some(first) = lines.next().transpose()? else {
        return Ok(());
    };
    match serde_json::from_str::<Hello>(&first) {
        Ok(h) if h.hello == PROTOCOL_VERSION => send(&writer, &HelloReply::accept())?,
        Ok(h) => {
            let reason = format!("unsupported protocol {:?}, server speaks {PROTOCOL_VERSION:?}", h.hello);
            return send(&writer, &HelloReply::refuse(reason));
        }
        Err(e) => return send(&writer, &HelloReply::refuse(format!("expected hello message: {e}"))),
    }

    let mut exec = Executor::new(config, scene_root);
    let mut in_flight: Option<InFlight> = None;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: CommandMessage = match serde_json::from_str(&line) {
            Ok(m) => m,
            Err(e) => {
                let id = serde_json::from_str::<Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(Value::as_u64));
                send(
                    &writer,
                    &Ack::error(id, exec.session().revision(), format!("malformed command: {e}")),
                )?;
                continue;
            }
        };
        let (ack, render) = exec.handle(&msg);
        send(&writer, &ack)?;
        if let Some(render) = render {
            if let Some(prev) = in_flight.take() {
                prev.settle();
            }
            in_flight = Some(start_render(render, writer.clone()));
        }
    }
    if let Some(prev) = in_flight.take() {
        prev.settle();
    }
    Ok(())
}

fn start_render(render: PendingRender, writer: Writer) -> InFlight {
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = cancel.clone();
    let handle = thread::spawn(move || {
        let id = render.request_id;
        let result = match render.job.run(&render.camera, &flag) {
            Ok(Some(frame)) => match FrameMessage::encode(id, frame.revision, &frame.image, render.encoding) {
                Ok(msg) => send(&writer, &msg),
                Err(e) => send(&writer, &Ack::error(Some(id), frame.revision, e)),
            },
            Ok(None) => send(&writer, &Cancelled::new(id)),
            Err(e) => send(&writer, &Ack::error(Some(id), render.job.revision(), e.to_string())),
        };
        if let Err(e) = result {
            warn!("failed to send frame {id}: {e}");
        }
    });
    InFlight { cancel, handle }
}
