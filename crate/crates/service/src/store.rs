//! Session persistence in an embedded key-value file, so a restart resumes
//! active sessions. Sessions idle for longer than the TTL are dropped.

use std::path::Path;

use redb::backends::InMemoryBackend;
use redb::{Database, ReadableDatabase, TableDefinition};

use crate::error::ServiceError;
use crate::session::LiveSession;

const SESSIONS: TableDefinition<&str, &[u8]> = TableDefinition::new("sessions");

pub const DEFAULT_TTL_SECS: u64 = 24 * 60 * 60;

fn db_err<E: Into<redb::Error>>(e: E) -> ServiceError {
    ServiceError::from(e.into())
}

pub struct SessionStore {
    db: Database,
    ttl_secs: u64,
}

impl SessionStore {
    pub fn open(path: &Path, ttl_secs: u64) -> Result<Self, ServiceError> {
        Self::init(Database::create(path).map_err(db_err)?, ttl_secs)
    }

    pub fn in_memory(ttl_secs: u64) -> Result<Self, ServiceError> {
        let db = Database::builder()
            .create_with_backend(InMemoryBackend::new())
            .map_err(db_err)?;
        Self::init(db, ttl_secs)
    }

    fn init(db: Database, ttl_secs: u64) -> Result<Self, ServiceError> {
        let tx = db.begin_write().map_err(db_err)?;
        tx.open_table(SESSIONS).map_err(db_err)?;
        tx.commit().map_err(db_err)?;
        Ok(Self { db, ttl_secs })
    }

    fn expired(&self, session: &LiveSession, now: u64) -> bool {
        now.saturating_sub(session.last_active) > self.ttl_secs
    }

    /// The session, unless it is unknown or has expired (expired sessions
    /// are deleted on the way).
    pub fn get(&self, id: &str, now: u64) -> Result<Option<LiveSession>, ServiceError> {
        let tx = self.db.begin_read().map_err(db_err)?;
        let table = tx.open_table(SESSIONS).map_err(db_err)?;
        let Some(raw) = table.get(id).map_err(db_err)? else {
            return Ok(None);
        };
        let session: LiveSession =
            serde_json::from_slice(raw.value()).map_err(|e| ServiceError::Store(e.to_string()))?;
        drop(raw);
        if self.expired(&session, now) {
            self.remove(id)?;
            return Ok(None);
        }
        Ok(Some(session))
    }

    pub fn put(&self, session: &LiveSession) -> Result<(), ServiceError> {
        let bytes = serde_json::to_vec(session).map_err(|e| ServiceError::Store(e.to_string()))?;
        let tx = self.db.begin_write().map_err(db_err)?;
        {
            let mut table = tx.open_table(SESSIONS).map_err(db_err)?;
            table.insert(session.id.as_str(), bytes.as_slice()).map_err(db_err)?;
        }
        tx.commit().map_err(db_err)
    }

    pub fn remove(&self, id: &str) -> Result<(), ServiceError> {
        let tx = self.db.begin_write().map_err(db_err)?;
        {
            let mut table = tx.open_table(SESSIONS).map_err(db_err)?;
            table.remove(id).map_err(db_err)?;
        }
        tx.commit().map_err(db_err)
    }

    /// Drops every expired session; returns how many were removed.
    pub fn purge_expired(&self, now: u64) -> Result<usize, ServiceError> {
        let tx = self.db.begin_write().map_err(db_err)?;
        let mut removed = 0;
        {
            let mut table = tx.open_table(SESSIONS).map_err(db_err)?;
            table
                .retain(|_, raw| match serde_json::from_slice::<LiveSession>(raw) {
                    Ok(s) if !self.expired(&s, now) => true,
                    _ => {
                        removed += 1;
                        false
                    }
                })
                .map_err(db_err)?;
        }
        tx.commit().map_err(db_err)?;
        Ok(removed)
    }
}
