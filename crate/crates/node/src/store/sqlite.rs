use std::path::Path;

use rusqlite::{params, Connection, OptionalExtension, Row};
use stated_core::{ContentHash, Domain, ParsedStatement, Timestamp};

use super::*;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS statements (
    id INTEGER PRIMARY KEY,
    hash TEXT NOT NULL UNIQUE,
    text TEXT NOT NULL,
    content_kind TEXT NOT NULL,
    source TEXT NOT NULL,
    first_seen INTEGER NOT NULL,
    verification TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS peers (
    peer_id TEXT PRIMARY KEY,
    cursor INTEGER NOT NULL,
    reputation REAL NOT NULL,
    last_pull INTEGER,
    delivered INTEGER NOT NULL,
    duplicates INTEGER NOT NULL,
    invalid INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS own_statements (
    position INTEGER PRIMARY KEY,
    hash TEXT NOT NULL UNIQUE
);
CREATE TABLE IF NOT EXISTS fetched_domains (
    domain TEXT PRIMARY KEY,
    last_success INTEGER NOT NULL
);
";

/// SQLite-backed store. Every write is one transaction with
/// `synchronous=FULL`, so a crash loses at most the write in flight.
pub struct SqliteStore {
    conn: Connection,
}

impl SqliteStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "FULL")?;
        conn.execute_batch(SCHEMA)?;
        Ok(SqliteStore { conn })
    }

    pub fn in_memory() -> Result<Self, StoreError> {
        let conn = Connection::open_in_memory()?;
        conn.execute_batch(SCHEMA)?;
        Ok(SqliteStore { conn })
    }
}

fn record(row: &Row<'_>) -> Result<NodeRecord, StoreError> {
    let id: u64 = row.get(0)?;
    let hash: String = row.get(1)?;
    let text: String = row.get(2)?;
    let source: String = row.get(3)?;
    let first_seen: i64 = row.get(4)?;
    let verification: String = row.get(5)?;
    let corrupt = |what: &str| StoreError::Corrupt(id, what.to_owned());
    let parsed = ParsedStatement::from_text(&text).map_err(|e| corrupt(&e.to_string()))?;
    if parsed.hash.as_str() != hash {
        return Err(corrupt("stored hash does not match text"));
    }
    Ok(NodeRecord {
        local_id: id,
        parsed,
        text,
        source: Source::decode(&source).ok_or_else(|| corrupt("source"))?,
        first_seen: Timestamp::from_unix(first_seen).ok_or_else(|| corrupt("first_seen"))?,
        verification: Verification::decode(&verification).ok_or_else(|| corrupt("verification"))?,
    })
}

fn peer(row: &Row<'_>) -> rusqlite::Result<PeerState> {
    Ok(PeerState {
        peer_id: row.get(0)?,
        cursor: row.get(1)?,
        reputation: row.get(2)?,
        last_pull: row.get::<_, Option<i64>>(3)?.and_then(Timestamp::from_unix),
        stats: PeerStats {
            delivered: row.get(4)?,
            duplicates: row.get(5)?,
            invalid: row.get(6)?,
        },
    })
}

const RECORD_COLUMNS: &str = "id, hash, text, source, first_seen, verification";

impl SqliteStore {
    fn peer_row(&self, id: &str) -> Result<Option<PeerState>, StoreError> {
        Ok(self
            .conn
            .query_row(
                "SELECT peer_id, cursor, reputation, last_pull, delivered, duplicates, invalid
                 FROM peers WHERE peer_id = ?1",
                [id],
                peer,
            )
            .optional()?)
    }
}

fn write_peer(conn: &Connection, p: &PeerState) -> rusqlite::Result<usize> {
    conn.execute(
        "UPDATE peers SET cursor = ?2, reputation = ?3, last_pull = ?4,
             delivered = ?5, duplicates = ?6, invalid = ?7
         WHERE peer_id = ?1",
        params![
            p.peer_id,
            p.cursor,
            p.reputation,
            p.last_pull.map(|t| t.unix()),
            p.stats.delivered,
            p.stats.duplicates,
            p.stats.invalid
        ],
    )
}

impl Store for SqliteStore {
    fn apply(&mut self, batch: WriteBatch) -> Result<Vec<Inserted>, StoreError> {
        let old_peer = match &batch.peer {
            Some(adv) => Some(
                self.peer_row(&adv.peer_id)?
                    .ok_or_else(|| StoreError::UnknownPeer(adv.peer_id.clone()))?,
            ),
            None => None,
        };
        let tx = self.conn.transaction()?;
        let mut out = Vec::with_capacity(batch.records.len());
        {
            let mut find = tx.prepare_cached("SELECT id FROM statements WHERE hash = ?1")?;
            let mut next = tx.prepare_cached("SELECT COALESCE(MAX(id), 0) + 1 FROM statements")?;
            let mut insert = tx.prepare_cached(
                "INSERT INTO statements (id, hash, text, content_kind, source, first_seen, verification)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            )?;
            for r in &batch.records {
                let hash = r.parsed.hash.as_str();
                if let Some(id) = find.query_row([hash], |row| row.get(0)).optional()? {
                    out.push(Inserted::Duplicate(id));
                    continue;
                }
                let id: u64 = next.query_row([], |row| row.get(0))?;
                insert.execute(params![
                    id,
                    hash,
                    r.text,
                    r.parsed.content.type_label(),
                    r.source.encode(),
                    r.first_seen.unix(),
                    r.verification.encode()
                ])?;
                out.push(Inserted::Stored(id));
            }
        }
        if let (Some(adv), Some(old)) = (&batch.peer, &old_peer) {
            let new = old.advanced(adv, &out);
            check_cursor(old, &new)?;
            write_peer(&tx, &new)?;
        }
        tx.commit()?;
        Ok(out)
    }

    fn get(&self, hash: &ContentHash) -> Result<Option<NodeRecord>, StoreError> {
        let mut stmt = self.conn.prepare_cached(&format!(
            "SELECT {RECORD_COLUMNS} FROM statements WHERE hash = ?1"
        ))?;
        let mut rows = stmt.query([hash.as_str()])?;
        match rows.next()? {
            Some(row) => Ok(Some(record(row)?)),
            None => Ok(None),
        }
    }

    fn range(&self, min_id: u64, limit: usize) -> Result<Vec<NodeRecord>, StoreError> {
        let mut stmt = self.conn.prepare_cached(&format!(
            "SELECT {RECORD_COLUMNS} FROM statements WHERE id > ?1 ORDER BY id LIMIT ?2"
        ))?;
        let limit = i64::try_from(limit).unwrap_or(i64::MAX);
        let min_id = i64::try_from(min_id).unwrap_or(i64::MAX);
        let mut rows = stmt.query(params![min_id, limit])?;
        let mut out = Vec::new();
        while let Some(row) = rows.next()? {
            out.push(record(row)?);
        }
        Ok(out)
    }

    fn max_id(&self) -> Result<u64, StoreError> {
        Ok(self
            .conn
            .query_row("SELECT COALESCE(MAX(id), 0) FROM statements", [], |r| {
                r.get(0)
            })?)
    }

    fn set_verification(&mut self, hash: &ContentHash, v: Verification) -> Result<(), StoreError> {
        self.conn.execute(
            "UPDATE statements SET verification = ?2 WHERE hash = ?1",
            params![hash.as_str(), v.encode()],
        )?;
        Ok(())
    }

    fn peers(&self) -> Result<Vec<PeerState>, StoreError> {
        let mut stmt = self.conn.prepare_cached(
            "SELECT peer_id, cursor, reputation, last_pull, delivered, duplicates, invalid
             FROM peers ORDER BY peer_id",
        )?;
        let rows = stmt.query_map([], peer)?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    fn add_peer(&mut self, p: PeerState) -> Result<(), StoreError> {
        self.conn.execute(
            "INSERT OR IGNORE INTO peers
                 (peer_id, cursor, reputation, last_pull, delivered, duplicates, invalid)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![
                p.peer_id,
                p.cursor,
                p.reputation,
                p.last_pull.map(|t| t.unix()),
                p.stats.delivered,
                p.stats.duplicates,
                p.stats.invalid
            ],
        )?;
        Ok(())
    }

    fn update_peer(&mut self, p: PeerState) -> Result<(), StoreError> {
        let old = self
            .peer_row(&p.peer_id)?
            .ok_or_else(|| StoreError::UnknownPeer(p.peer_id.clone()))?;
        check_cursor(&old, &p)?;
        write_peer(&self.conn, &p)?;
        Ok(())
    }

    fn own_statements(&self) -> Result<Vec<ContentHash>, StoreError> {
        let mut stmt = self
            .conn
            .prepare_cached("SELECT hash FROM own_statements ORDER BY position")?;
        let rows = stmt.query_map([], |r| r.get::<_, String>(0))?;
        let mut out = Vec::new();
        for h in rows {
            let h = h?;
            out.push(
                h.parse()
                    .map_err(|_| StoreError::Corrupt(0, format!("own hash {h}")))?,
            );
        }
        Ok(out)
    }

    fn add_own_statement(&mut self, hash: &ContentHash) -> Result<(), StoreError> {
        self.conn.execute(
            "INSERT OR IGNORE INTO own_statements (hash) VALUES (?1)",
            [hash.as_str()],
        )?;
        Ok(())
    }

    fn mark_fetched(&mut self, domain: &Domain, at: Timestamp) -> Result<(), StoreError> {
        self.conn.execute(
            "INSERT INTO fetched_domains (domain, last_success) VALUES (?1, ?2)
             ON CONFLICT(domain) DO UPDATE SET last_success = excluded.last_success",
            params![domain.as_str(), at.unix()],
        )?;
        Ok(())
    }

    fn last_fetched(&self, domain: &Domain) -> Result<Option<Timestamp>, StoreError> {
        let t: Option<i64> = self
            .conn
            .query_row(
                "SELECT last_success FROM fetched_domains WHERE domain = ?1",
                [domain.as_str()],
                |r| r.get(0),
            )
            .optional()?;
        Ok(t.and_then(Timestamp::from_unix))
    }
}
