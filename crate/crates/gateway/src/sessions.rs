use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use spark_core::DialogState;

pub const SESSION_TTL: Duration = Duration::from_secs(30 * 60);

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub dialog: DialogState,
    pub created_at: DateTime<Utc>,
    last_active: Instant,
}

pub type SessionRef = Arc<Mutex<Session>>;

/// Live sessions keyed by id. Idle ones expire after the TTL.
#[derive(Debug)]
pub struct Sessions {
    map: Mutex<HashMap<String, SessionRef>>,
    ttl: Duration,
}

impl Default for Sessions {
    fn default() -> Self {
        Sessions::with_ttl(SESSION_TTL)
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Sessions {
    pub fn with_ttl(ttl: Duration) -> Self {
        Sessions {
            map: Mutex::default(),
            ttl,
        }
    }

    pub fn create(&self) -> SessionRef {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Arc::new(Mutex::new(Session {
            id: id.clone(),
            dialog: DialogState::new(),
            created_at: Utc::now(),
            last_active: Instant::now(),
        }));
        lock(&self.map).insert(id, session.clone());
        session
    }

    /// Looks up a live session and marks it active.
    pub fn get(&self, id: &str) -> Option<SessionRef> {
        self.sweep();
        let session = lock(&self.map).get(id).cloned()?;
        touch(&session);
        Some(session)
    }

    pub fn len(&self) -> usize {
        lock(&self.map).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions idle for longer than the TTL. Sessions busy in
    /// another thread are skipped.
    pub fn sweep(&self) -> usize {
        let now = Instant::now();
        let mut map = lock(&self.map);
        let before = map.len();
        map.retain(|_, s| match s.try_lock() {
            Ok(s) => now.duration_since(s.last_active) <= self.ttl,
            Err(_) => true,
        });
        before - map.len()
    }
}

pub fn touch(session: &SessionRef) {
    lock(session).last_active = Instant::now();
}

pub fn with_session<R>(session: &SessionRef, f: impl FnOnce(&mut Session) -> R) -> R {
    let mut s = lock(session);
    s.last_active = Instant::now();
    f(&mut s)
}
