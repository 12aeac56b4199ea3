from sqlalchemy import create_engine, func, Column, String, DateTime, Float, Integer
from sqlalchemy.orm import declarative_base, sessionmaker
from datetime import datetime

# Create the base class for declarative models
Base = declarative_base()


# One evaluated scene of one run
class EvalRecord(Base):
    __tablename__ = 'eval_records'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String(64), nullable=False, index=True)
    scene_id = Column(String(128), nullable=False)
    created_at = Column(DateTime, default=datetime.utcnow)

    mean_iou = Column(Float, nullable=True)

    # Room level
    room_precision = Column(Float, nullable=True)
    room_recall = Column(Float, nullable=True)
    room_f1 = Column(Float, nullable=True)

    # Corner level
    corner_precision = Column(Float, nullable=True)
    corner_recall = Column(Float, nullable=True)
    corner_f1 = Column(Float, nullable=True)

    # Angle level
    angle_precision = Column(Float, nullable=True)
    angle_recall = Column(Float, nullable=True)
    angle_f1 = Column(Float, nullable=True)

    flags = Column(String(256), nullable=True)

    def __repr__(self):
        return f"<EvalRecord(run_id='{self.run_id}', scene_id='{self.scene_id}')>"


def create_session_factory(database_url: str):
    """Engine + tables + session factory for the given URL"""
    engine = create_engine(database_url)
    Base.metadata.create_all(engine)
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


def save_eval_records(session_factory, run_id: str, rows) -> int:
    """rows: dicts with scene_id plus the per-scene metric columns"""
    columns = {c.name for c in EvalRecord.__table__.columns}
    db = session_factory()
    try:
        for row in rows:
            db.add(EvalRecord(run_id=run_id, **{k: v for k, v in row.items() if k in columns}))
        db.commit()
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()
    return len(rows)


def best_runs(session_factory, limit: int = 10):
    """(run_id, mean room F1) ordered best first"""
    db = session_factory()
    try:
        query = (db.query(EvalRecord.run_id, func.avg(EvalRecord.room_f1).label("room_f1"))
                 .group_by(EvalRecord.run_id)
                 .order_by(func.avg(EvalRecord.room_f1).desc())
                 .limit(limit))
        return [(run_id, float(f1)) for run_id, f1 in query.all()]
    finally:
        db.close()
