//! Newline-delimited JSON protocol between the engine and external agents.
//!
//! The engine opens a session with `hello`, sends one `request_orders` per
//! decision and closes with `bye`. The agent answers `hello` with `hello` and
//! every request with exactly one `orders` or `error` carrying the same `id`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bots::{Agent, HoldAgent, Observation};
use crate::game::MovementOrders;
use crate::map::MapGraph;
use crate::order::{parse_order, Order, OrderContext};
use crate::power::Power;
use crate::record::StateSnapshot;
use crate::state::GameState;

pub const PROTOCOL_VERSION: u32 = 1;
/// Environment variable overriding the per-request timeout, in seconds.
pub const TIMEOUT_ENV: &str = "NOPRESS_AGENT_TIMEOUT";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        version: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        map: Option<String>,
    },
    RequestOrders(Box<Request>),
    Orders {
        id: u64,
        orders: Vec<String>,
    },
    Error {
        #[serde(default)]
        id: Option<u64>,
        message: String,
    },
    Bye,
}

impl Message {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("message serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub power: Power,
    pub phase: String,
    pub state: StateSnapshot,
    /// Last movement phase: the state it was played from and every power's orders.
    pub prev: Option<PrevOrders>,
    /// Legal order texts keyed by location name.
    pub legal: BTreeMap<String, Vec<String>>,
    pub required: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevOrders {
    pub state: StateSnapshot,
    pub orders: BTreeMap<Power, Vec<String>>,
}

impl PrevOrders {
    pub fn of(map: &MapGraph, prev: &MovementOrders) -> Self {
        let mut orders: BTreeMap<Power, Vec<String>> = BTreeMap::new();
        for (p, o) in &prev.orders {
            orders.entry(*p).or_default().push(o.to_text(map));
        }
        PrevOrders {
            state: StateSnapshot::of(map, &prev.state),
            orders,
        }
    }

    pub fn to_movement(&self, map: &MapGraph) -> Result<MovementOrders, String> {
        let state = self.state.to_state(map)?;
        let mut orders = Vec::new();
        for (p, list) in &self.orders {
            for text in list {
                let o = parse_order(map, text).map_err(|e| e.to_string())?;
                orders.push((*p, o));
            }
        }
        Ok(MovementOrders { state, orders })
    }
}

impl Request {
    pub fn of(id: u64, obs: &Observation) -> Self {
        Request {
            id,
            power: obs.power,
            phase: obs.state.phase().code(),
            state: StateSnapshot::of(obs.map, obs.state),
            prev: obs.prev.map(|m| PrevOrders::of(obs.map, m)),
            legal: obs
                .legal
                .iter()
                .map(|(l, set)| {
                    let texts = set.orders.iter().map(|o| o.to_text(obs.map)).collect();
                    (obs.map.name(*l).to_string(), texts)
                })
                .collect(),
            required: obs.required,
        }
    }

    /// Rebuilds the state and previous movement orders described by the request.
    pub fn restore(&self, map: &MapGraph) -> Result<(GameState, Option<MovementOrders>), String> {
        let state = self.state.to_state(map)?;
        let prev = self.prev.as_ref().map(|p| p.to_movement(map)).transpose()?;
        Ok((state, prev))
    }
}

/// Timeout from [`TIMEOUT_ENV`], or the default.
pub fn timeout_from_env() -> Duration {
    std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|s| s.is_finite() && *s > 0.0)
        .map(Duration::from_secs_f64)
        .unwrap_or(DEFAULT_TIMEOUT)
}

/// Runs `agent` as the agent side of a session until `bye` or end of input.
pub fn serve(
    map: &MapGraph,
    agent: &mut dyn Agent,
    input: impl BufRead,
    mut output: impl Write,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Message>(&line) {
            Ok(Message::Hello { .. }) => Message::Hello {
                version: PROTOCOL_VERSION,
                name: Some(agent.name()),
                map: Some(map.name_of_map().to_string()),
            },
            Ok(Message::RequestOrders(req)) => match req.restore(map) {
                Ok((state, prev)) => {
                    let obs = Observation::new(map, &state, req.power, prev.as_ref());
                    let orders = agent.decide(&obs).iter().map(|o| o.to_text(map)).collect();
                    Message::Orders { id: req.id, orders }
                }
                Err(message) => Message::Error {
                    id: Some(req.id),
                    message,
                },
            },
            Ok(Message::Bye) => return Ok(()),
            Ok(other) => Message::Error {
                id: None,
                message: format!("unexpected message {other:?}"),
            },
            Err(e) => Message::Error {
                id: None,
                message: format!("malformed message: {e}"),
            },
        };
        output.write_all(reply.to_line().as_bytes())?;
        output.flush()?;
    }
    Ok(())
}

struct Session {
    writer: Box<dyn Write + Send>,
    lines: Receiver<String>,
    child: Option<Child>,
}

impl Session {
    fn send(&mut self, msg: &Message) -> std::io::Result<()> {
        self.writer.write_all(msg.to_line().as_bytes())?;
        self.writer.flush()
    }

    fn receive(&mut self, deadline: Instant) -> Result<Message, String> {
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => {
                    return serde_json::from_str(&line).map_err(|e| format!("malformed reply: {e}"))
                }
                Err(RecvTimeoutError::Timeout) => return Err("timed out".into()),
                Err(RecvTimeoutError::Disconnected) => return Err("connection closed".into()),
            }
        }
    }
}

fn pump(reader: impl std::io::Read + Send + 'static) -> Receiver<String> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    rx
}

/// An agent living in another process, reached over the wire protocol.
/// Any failure makes the power fall back to civil disorder for that decision.
pub struct ExternalAgent {
    endpoint: String,
    name: String,
    timeout: Duration,
    session: Option<Session>,
    next_id: u64,
    civil_disorders: usize,
    flagged: usize,
}

impl ExternalAgent {
    /// Starts `command` through the shell and talks over its standard streams.
    pub fn spawn(command: &str) -> Self {
        let session = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map(|mut child| {
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Session {
                    writer: Box::new(stdin),
                    lines: pump(stdout),
                    child: Some(child),
                }
            })
            .map_err(|e| log::warn!("cannot start agent `{command}`: {e}"))
            .ok();
        ExternalAgent::open(format!("cmd:{command}"), session)
    }

    /// Connects to an agent listening at `addr` (`host:port`).
    pub fn connect(addr: &str) -> Self {
        let session = TcpStream::connect(addr)
            .and_then(|s| Ok((s.try_clone()?, s)))
            .map(|(r, w)| Session {
                writer: Box::new(w),
                lines: pump(r),
                child: None,
            })
            .map_err(|e| log::warn!("cannot connect to agent at {addr}: {e}"))
            .ok();
        ExternalAgent::open(format!("tcp:{addr}"), session)
    }

    fn open(endpoint: String, session: Option<Session>) -> Self {
        let mut agent = ExternalAgent {
            name: endpoint.clone(),
            endpoint,
            timeout: timeout_from_env(),
            session,
            next_id: 0,
            civil_disorders: 0,
            flagged: 0,
        };
        agent.handshake();
        agent
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn is_connected(&self) -> bool {
        self.session.is_some()
    }

    fn handshake(&mut self) {
        let Some(s) = self.session.as_mut() else {
            return;
        };
        let hello = Message::Hello {
            version: PROTOCOL_VERSION,
            name: None,
            map: None,
        };
        let reply = s
            .send(&hello)
            .map_err(|e| e.to_string())
            .and_then(|_| s.receive(Instant::now() + self.timeout));
        match reply {
            Ok(Message::Hello { name, .. }) => {
                if let Some(n) = name {
                    self.name = n;
                }
            }
            Ok(other) => self.fail(&format!("expected hello, got {other:?}")),
            Err(e) => self.fail(&e),
        }
    }

    fn fail(&mut self, why: &str) {
        log::error!("agent {}: {why}; civil disorder from now on", self.endpoint);
        self.session = None;
    }

    fn ask(&mut self, obs: &Observation) -> Result<Vec<String>, String> {
        let Some(s) = self.session.as_mut() else {
            return Err("not connected".into());
        };
        self.next_id += 1;
        let id = self.next_id;
        if let Err(e) = s.send(&Message::RequestOrders(Box::new(Request::of(id, obs)))) {
            let why = e.to_string();
            self.fail(&why);
            return Err(why);
        }
        let deadline = Instant::now() + self.timeout;
        loop {
            match s.receive(deadline) {
                Ok(Message::Orders { id: got, orders }) if got == id => return Ok(orders),
                Ok(Message::Error { id: got, message }) if got.is_none() || got == Some(id) => {
                    return Err(format!("agent error: {message}"))
                }
                Ok(stale) => log::debug!("agent {}: dropping {stale:?}", self.endpoint),
                Err(e) if e == "timed out" || e.starts_with("malformed") => return Err(e),
                Err(e) => {
                    self.fail(&e);
                    return Err(e);
                }
            }
        }
    }

    /// Decisions replaced wholesale by civil disorder.
    pub fn civil_disorders(&self) -> usize {
        self.civil_disorders
    }

    /// Individual orders dropped because they were unparsable or illegal.
    pub fn flagged(&self) -> usize {
        self.flagged
    }
}

impl Agent for ExternalAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn decide(&mut self, obs: &Observation) -> Vec<Order> {
        let texts = match self.ask(obs) {
            Ok(t) => t,
            Err(e) => {
                log::warn!(
                    "agent {} ({} {}): {e}",
                    self.endpoint,
                    obs.power,
                    obs.state.phase()
                );
                self.civil_disorders += 1;
                return HoldAgent.decide(obs);
            }
        };
        let ctx = OrderContext::new(obs.map, obs.state);
        let mut orders = Vec::new();
        for t in texts {
            match parse_order(obs.map, &t) {
                Ok(o) if ctx.check(obs.power, &o).is_ok() => orders.push(o),
                Ok(_) => {
                    log::warn!(
                        "agent {}: illegal order `{t}` replaced by default",
                        self.endpoint
                    );
                    self.flagged += 1;
                }
                Err(e) => {
                    log::warn!("agent {}: unparsable order `{t}`: {e}", self.endpoint);
                    self.flagged += 1;
                }
            }
        }
        orders
    }

    fn substitutions(&self) -> usize {
        self.civil_disorders + self.flagged
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        let Some(mut s) = self.session.take() else {
            return;
        };
        let _ = s.send(&Message::Bye);
        drop(s.writer);
        if let Some(mut child) = s.child.take() {
            let until = Instant::now() + Duration::from_millis(500);
            while Instant::now() < until {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bots::{play_game, RandomAgent};
    use crate::game::{Game, Rules};
    use crate::map::standard_map;
    use crate::record::replay;
    use std::net::TcpListener;

    struct FirstLegal;

    impl Agent for FirstLegal {
        fn name(&self) -> String {
            "first".into()
        }

        fn decide(&mut self, obs: &Observation) -> Vec<Order> {
            obs.legal
                .iter()
                .take(obs.required)
                .filter_map(|(_, s)| s.orders.first().copied())
                .collect()
        }
    }

    fn listen(make: impl Fn() -> Box<dyn Agent> + Send + 'static) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let mut agent = make();
                std::thread::spawn(move || {
                    let reader = BufReader::new(stream.try_clone().unwrap());
                    let _ = serve(standard_map(), agent.as_mut(), reader, stream);
                });
            }
        });
        addr
    }

    #[test]
    fn messages_use_type_tags() {
        let bye = Message::Bye.to_line();
        assert_eq!(bye, "{\"type\":\"bye\"}\n");
        let orders = Message::Orders {
            id: 3,
            orders: vec!["A PAR H".into()],
        };
        let v: serde_json::Value = serde_json::from_str(&orders.to_line()).unwrap();
        assert_eq!(v["type"], "orders");
        assert_eq!(v["orders"][0], "A PAR H");
    }

    #[test]
    fn request_roundtrips_observation() {
        let map = standard_map();
        let mut game = Game::new(map, Rules::default());
        let mut agents: Vec<Box<dyn Agent>> = (0..7)
            .map(|i| Box::new(RandomAgent::new(i)) as Box<dyn Agent>)
            .collect();
        let orders = crate::bots::collect_orders(&game, &mut agents);
        game.step(&orders).unwrap();
        let obs = Observation::new(map, game.state(), Power::France, game.last_movement());
        let req = Request::of(7, &obs);
        let text = Message::RequestOrders(Box::new(req.clone())).to_line();
        let back: Message = serde_json::from_str(&text).unwrap();
        assert_eq!(back, Message::RequestOrders(Box::new(req.clone())));
        let (state, prev) = req.restore(map).unwrap();
        assert_eq!(&state, game.state());
        assert_eq!(prev.as_ref(), game.last_movement());
        assert_eq!(req.legal.len(), obs.legal.len());
    }

    #[test]
    fn echo_agent_orders_are_accepted() {
        let addr = listen(|| Box::new(FirstLegal));
        let map = standard_map();
        let game = Game::new(map, Rules::default());
        let obs = Observation::new(map, game.state(), Power::Austria, None);
        let mut agent = ExternalAgent::connect(&addr);
        assert_eq!(agent.name(), "first");
        let orders = agent.decide(&obs);
        assert_eq!(orders, FirstLegal.decide(&obs));
        assert_eq!(agent.civil_disorders(), 0);
    }

    #[test]
    fn illegal_orders_are_dropped_and_flagged() {
        struct Liar;
        impl Agent for Liar {
            fn name(&self) -> String {
                "liar".into()
            }
            fn decide(&mut self, obs: &Observation) -> Vec<Order> {
                let mut o = FirstLegal.decide(obs);
                o.push(parse_order(obs.map, "A PAR - MOS").unwrap());
                o
            }
        }
        let addr = listen(|| Box::new(Liar));
        let map = standard_map();
        let game = Game::new(map, Rules::default());
        let obs = Observation::new(map, game.state(), Power::France, None);
        let mut agent = ExternalAgent::connect(&addr);
        let orders = agent.decide(&obs);
        assert_eq!(orders.len(), 3);
        assert_eq!(agent.flagged(), 1);
    }

    #[test]
    fn silent_agent_times_out_to_holds() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut w = stream.try_clone().unwrap();
            let mut lines = BufReader::new(stream).lines();
            lines.next();
            w.write_all(
                Message::Hello {
                    version: 1,
                    name: None,
                    map: None,
                }
                .to_line()
                .as_bytes(),
            )
            .unwrap();
            for _ in lines {}
        });
        std::env::remove_var(TIMEOUT_ENV);
        let map = standard_map();
        let game = Game::new(map, Rules::default());
        let obs = Observation::new(map, game.state(), Power::Italy, None);
        let mut agent = ExternalAgent::connect(&addr).with_timeout(Duration::from_millis(100));
        assert!(agent.is_connected());
        let orders = agent.decide(&obs);
        assert_eq!(orders, HoldAgent.decide(&obs));
        assert!(orders.iter().all(|o| matches!(o, Order::Hold(_))));
        assert_eq!(agent.civil_disorders(), 1);
    }

    #[test]
    fn unreachable_endpoint_plays_civil_disorder() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        drop(listener);
        let mut agent = ExternalAgent::connect(&addr);
        assert!(!agent.is_connected());
        let map = standard_map();
        let game = Game::new(map, Rules::default());
        let obs = Observation::new(map, game.state(), Power::Russia, None);
        assert_eq!(agent.decide(&obs).len(), 4);
        assert_eq!(agent.civil_disorders(), 1);
    }

    #[test]
    fn conforming_agents_finish_a_game_without_substitutions() {
        let addr = listen(|| Box::new(RandomAgent::new(11)));
        let map = standard_map();
        let rules = Rules {
            year_cap: 1904,
            ..Rules::default()
        };
        let mut agents: Vec<Box<dyn Agent>> = (0..7)
            .map(|_| Box::new(ExternalAgent::connect(&addr)) as Box<dyn Agent>)
            .collect();
        let record = play_game(map, rules, &mut agents);
        assert!(record.outcome.is_over());
        assert!(agents.iter().all(|a| a.substitutions() == 0));
        replay(map, &record).unwrap();
    }
}
