use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use kitrobot_core::scenario::{Scenario, Status};
use kitrobot_core::vm::TraceRecord;
use kitrobot_core::world::WorldState;
use serde::Serialize;
use tokio::sync::Mutex as AsyncMutex;

/// A running scenario plus how much of its trace has been handed out.
pub(crate) struct Run {
    pub scenario: Scenario,
    pub delivered: usize,
}

impl Run {
    pub fn new(scenario: Scenario) -> Self {
        Run { scenario, delivered: 0 }
    }

    /// Trace records not yet returned to the client.
    pub fn take_new(&mut self) -> Vec<TraceRecord> {
        let out = self.scenario.trace()[self.delivered..].to_vec();
        self.delivered = self.scenario.trace().len();
        out
    }

    pub fn snapshot(&self, id: &str, created_at: u64) -> Snapshot {
        let s = &self.scenario;
        Snapshot {
            id: id.to_string(),
            status: s.status(),
            clock: s.clock(),
            max_ticks: s.max_ticks(),
            created_at,
            agents: s
                .agents()
                .into_iter()
                .map(|(name, done)| AgentView {
                    name: name.to_string(),
                    done,
                })
                .collect(),
            world: s.world().clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub(crate) struct AgentView {
    pub name: String,
    pub done: bool,
}

#[derive(Debug, Serialize)]
pub(crate) struct Snapshot {
    pub id: String,
    pub status: Status,
    pub clock: u64,
    pub max_ticks: u64,
    pub created_at: u64,
    pub agents: Vec<AgentView>,
    pub world: WorldState,
}

pub(crate) struct Session {
    pub id: String,
    pub created_at: u64,
    touched: Mutex<Instant>,
    /// `None` only while a step is executing off the async runtime.
    pub run: Arc<AsyncMutex<Option<Run>>>,
}

impl Session {
    fn touch(&self) {
        *self.touched.lock().unwrap() = Instant::now();
    }

    fn idle(&self) -> Duration {
        self.touched.lock().unwrap().elapsed()
    }
}

pub(crate) struct Sessions {
    table: Mutex<HashMap<String, Arc<Session>>>,
    expiry: Duration,
}

impl Sessions {
    pub fn new(expiry: Duration) -> Self {
        Sessions {
            table: Mutex::new(HashMap::new()),
            expiry,
        }
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap().len()
    }

    fn sweep(&self, table: &mut HashMap<String, Arc<Session>>) {
        table.retain(|_, s| s.idle() < self.expiry);
    }

    pub fn insert(&self, run: Run) -> Arc<Session> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let session = Arc::new(Session {
            id: id.clone(),
            created_at,
            touched: Mutex::new(Instant::now()),
            run: Arc::new(AsyncMutex::new(Some(run))),
        });
        let mut table = self.table.lock().unwrap();
        self.sweep(&mut table);
        table.insert(id, session.clone());
        session
    }

    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        let mut table = self.table.lock().unwrap();
        self.sweep(&mut table);
        let s = table.get(id).cloned()?;
        s.touch();
        Some(s)
    }

    pub fn remove(&self, id: &str) -> bool {
        let mut table = self.table.lock().unwrap();
        self.sweep(&mut table);
        table.remove(id).is_some()
    }
}
