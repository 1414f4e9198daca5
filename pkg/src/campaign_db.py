"""
Campaign Database

SQLite store for everything a campaign produces: episodes, every mutant,
every compile outcome and every filtered candidate. Statistics are
recomputed from here, so the emitted numbers always match the raw records.
"""

import json
import sqlite3
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, List, Dict, Any, Sequence

import pandas as pd

from core_model import CompileOutcome, FilterRecord, SessionStats, SourceProgram, ViolationCandidate

# Episode outcomes
VIOLATION = "Violation"
EXHAUSTED_STEPS = "ExhaustedSteps"
COMPILE_FAILURE = "CompileFailure"
PROVIDER_FAILURE = "ProviderFailure"

EPISODE_OUTCOMES = (VIOLATION, EXHAUSTED_STEPS, COMPILE_FAILURE, PROVIDER_FAILURE)


class CampaignDatabase:
    """
    Manages the campaign database.

    Handles:
    - Schema setup on first use
    - Episode, step and compile-outcome records
    - Candidate decisions with their filter evidence
    - Statistics recomputed from the episode table
    """

    def __init__(self, db_path: str = "campaign.db"):
        """
        Initialize the campaign database.

        Args:
            db_path: Path to the SQLite database file
        """
        self.db_path = str(db_path)
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self._ensure_database()

    def _ensure_database(self):
        """Create tables if they don't exist."""
        schema_path = Path(__file__).parent / "schema.sql"
        if not schema_path.exists():
            raise FileNotFoundError(f"Schema file not found: {schema_path}")
        with self.get_connection() as conn:
            conn.executescript(schema_path.read_text(encoding='utf-8'))

    @contextmanager
    def get_connection(self):
        """
        Get a database connection with proper transaction handling.

        Yields:
            sqlite3.Connection: Database connection
        """
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        conn.execute("PRAGMA foreign_keys = ON")
        try:
            yield conn
            conn.commit()
        except Exception:
            conn.rollback()
            raise
        finally:
            conn.close()

    # ============================================================
    # EPISODES
    # ============================================================

    def create_episode(self, episode_id: str, episode_index: int, rng_seed: int) -> str:
        with self.get_connection() as conn:
            conn.execute(
                """INSERT OR REPLACE INTO episodes (episode_id, episode_index, rng_seed)
                   VALUES (?, ?, ?)""",
                (episode_id, episode_index, rng_seed)
            )
        return episode_id

    def finish_episode(
        self,
        episode_id: str,
        outcome: str,
        steps: int,
        report_path: Optional[str] = None
    ) -> bool:
        """
        Record how an episode ended.

        Raises:
            ValueError: If outcome is not a known episode outcome
        """
        if outcome not in EPISODE_OUTCOMES:
            raise ValueError(
                f"Invalid outcome '{outcome}'. Must be one of: {', '.join(EPISODE_OUTCOMES)}"
            )
        with self.get_connection() as conn:
            cursor = conn.execute(
                "UPDATE episodes SET outcome = ?, steps = ?, report_path = ? WHERE episode_id = ?",
                (outcome, steps, report_path, episode_id)
            )
            return cursor.rowcount > 0

    def get_episode(self, episode_id: str) -> Optional[Dict[str, Any]]:
        """Get episode by ID."""
        with self.get_connection() as conn:
            row = conn.execute("SELECT * FROM episodes WHERE episode_id = ?", (episode_id,)).fetchone()
            return dict(row) if row else None

    def list_episodes(self) -> List[Dict[str, Any]]:
        with self.get_connection() as conn:
            cursor = conn.execute("SELECT * FROM episodes ORDER BY episode_index")
            return [dict(row) for row in cursor.fetchall()]

    # ============================================================
    # STEPS AND OUTCOMES
    # ============================================================

    def add_step(
        self,
        episode_id: str,
        program: SourceProgram,
        compilable: bool,
        mutation_time: Optional[float] = None
    ) -> int:
        instruction_id = program.lineage[-1] if program.lineage else None
        with self.get_connection() as conn:
            cursor = conn.execute(
                """INSERT OR REPLACE INTO steps
                   (episode_id, step_index, instruction_id, code, parent_digest, code_digest,
                    compilable, mutation_time)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?)""",
                (episode_id, program.step_index, instruction_id, program.code,
                 program.parent_digest, program.digest, int(compilable), mutation_time)
            )
            return cursor.lastrowid

    def get_steps(self, episode_id: str) -> List[Dict[str, Any]]:
        with self.get_connection() as conn:
            cursor = conn.execute(
                "SELECT * FROM steps WHERE episode_id = ? ORDER BY step_index", (episode_id,)
            )
            return [dict(row) for row in cursor.fetchall()]

    def add_outcomes(self, episode_id: str, step_index: int, outcomes: Sequence[CompileOutcome]):
        with self.get_connection() as conn:
            conn.executemany(
                """INSERT INTO compile_outcomes
                   (episode_id, step_index, compiler_id, opt_flag, success, size, wall_time, diagnostics)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?)""",
                [
                    (episode_id, step_index, o.compiler_id, o.opt_flag, int(o.success),
                     o.size_value, o.wall_time, o.diagnostics)
                    for o in outcomes
                ]
            )

    def get_outcomes(self, episode_id: str, step_index: Optional[int] = None) -> List[Dict[str, Any]]:
        query = "SELECT * FROM compile_outcomes WHERE episode_id = ?"
        params: List[Any] = [episode_id]
        if step_index is not None:
            query += " AND step_index = ?"
            params.append(step_index)
        with self.get_connection() as conn:
            cursor = conn.execute(query + " ORDER BY step_index, outcome_id", params)
            return [dict(row) for row in cursor.fetchall()]

    # ============================================================
    # CANDIDATES
    # ============================================================

    def add_candidate(
        self,
        episode_id: str,
        candidate: ViolationCandidate,
        passed: bool,
        evidence: Sequence[FilterRecord]
    ) -> int:
        with self.get_connection() as conn:
            cursor = conn.execute(
                """INSERT INTO candidates
                   (episode_id, step_index, strategy, inequality, decision, filter_evidence)
                   VALUES (?, ?, ?, ?, ?, ?)""",
                (episode_id, candidate.program.step_index, candidate.strategy.value,
                 candidate.inequality(), "Violation" if passed else "Rejected",
                 json.dumps([r.to_dict() for r in evidence], sort_keys=True))
            )
            return cursor.lastrowid

    def get_candidates(self, episode_id: Optional[str] = None) -> List[Dict[str, Any]]:
        query = "SELECT * FROM candidates"
        params: List[Any] = []
        if episode_id is not None:
            query += " WHERE episode_id = ?"
            params.append(episode_id)
        with self.get_connection() as conn:
            cursor = conn.execute(query + " ORDER BY candidate_id", params)
            rows = [dict(row) for row in cursor.fetchall()]
        for row in rows:
            row['filter_evidence'] = json.loads(row['filter_evidence'])
        return rows

    # ============================================================
    # STATISTICS
    # ============================================================

    def episodes_frame(self) -> pd.DataFrame:
        """Finished episodes as a DataFrame (ProviderFailure episodes excluded)"""
        with self.get_connection() as conn:
            return pd.read_sql_query(
                """SELECT episode_id, episode_index, rng_seed, outcome, steps, report_path
                   FROM episodes
                   WHERE outcome IS NOT NULL AND outcome != ?
                   ORDER BY episode_index""",
                conn,
                params=(PROVIDER_FAILURE,)
            )

    def candidates_frame(self) -> pd.DataFrame:
        with self.get_connection() as conn:
            return pd.read_sql_query(
                "SELECT episode_id, step_index, strategy, inequality, decision FROM candidates "
                "ORDER BY candidate_id",
                conn
            )

    def compute_stats(self) -> SessionStats:
        """Campaign statistics recomputed from the raw episode records"""
        return stats_from_frame(self.episodes_frame())


def stats_from_frame(episodes: pd.DataFrame) -> SessionStats:
    """
    SessionStats from a frame with 'outcome' and 'steps' columns.

    total = counted episodes, compilable = not ended by CompileFailure,
    violations = ended by a confirmed Violation.
    """
    if episodes.empty:
        return SessionStats()
    counted = episodes[episodes['outcome'] != PROVIDER_FAILURE]
    if counted.empty:
        return SessionStats()
    steps = counted['steps'].astype(int)
    return SessionStats(
        total_programs=int(len(counted)),
        compilable=int((counted['outcome'] != COMPILE_FAILURE).sum()),
        violations=int((counted['outcome'] == VIOLATION).sum()),
        steps_min=int(steps.min()),
        steps_mean=round(float(steps.mean()), 2),
        steps_max=int(steps.max()),
    )
