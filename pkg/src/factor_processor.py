import asyncio
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from fractions import Fraction
from typing import Dict, Iterable, List, Optional

from sqlalchemy.exc import IntegrityError

from src.database import SessionLocal, init_db
from src.errors import DensityError
from src.localdensity import local_factor, make_shape
from src.models import LocalFactorRecord, SweepStatistics
from src.schemas import LocalFactor, LocalRow, ShapeVariant, WeilPolynomial, render_rational
from src.weilpoly import parse_weil

logger = logging.getLogger(__name__)


def compute_row(coeffs: List[int], q: int, ell: int) -> Dict:
    """One local factor as plain data, safe to ship back from a worker process"""
    f = parse_weil(coeffs, q)
    try:
        factor = local_factor(f, ell)
    except DensityError as e:
        return {"ell": ell, "kind": "ell", "error": e.detail()}
    return {
        "ell": ell,
        "kind": factor.kind,
        "shape": factor.shape.variant.value if factor.shape else None,
        "nu_f": render_rational(factor.nu_f),
        "nu_k": render_rational(factor.nu_K),
        "matched": factor.matched,
    }


def row_from_record(record: LocalFactorRecord, g: int) -> LocalRow:
    if record.error:
        return LocalRow(ell=record.ell, error=record.error)
    shape = make_shape(ShapeVariant(record.shape), g) if record.shape else None
    factor = LocalFactor(
        ell=record.ell,
        kind=record.kind,
        shape=shape,
        nu_f=Fraction(record.nu_f),
        nu_K=Fraction(record.nu_k),
        matched=bool(record.matched),
    )
    return LocalRow(ell=record.ell, factor=factor)


class FactorProcessor:
    def __init__(self, batch_size=None, threads=1):
        default_batch_size = int(os.getenv("BATCH_SIZE", "200"))
        self.batch_size = batch_size if batch_size is not None else default_batch_size
        self.threads = threads

        self.queue = asyncio.Queue()
        self.running = False
        self.start_time = datetime.utcnow()
        self.executor = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None

    async def start(self):
        """Collect queued primes into batches and compute them"""
        self.running = True
        logger.info(f"Factor processor started with batch size {self.batch_size}, {self.threads} worker(s)")

        while self.running:
            try:
                batch = []
                try:
                    batch.append(await asyncio.wait_for(self.queue.get(), timeout=1.0))
                    while len(batch) < self.batch_size:
                        try:
                            batch.append(await asyncio.wait_for(self.queue.get(), timeout=0.1))
                        except asyncio.TimeoutError:
                            break
                except asyncio.TimeoutError:
                    continue

                try:
                    await self.process_batch(batch)
                finally:
                    for _ in batch:
                        self.queue.task_done()

            except asyncio.CancelledError:
                logger.info("Factor processor cancelled")
                await self._flush_remaining()
                break
            except Exception as e:
                logger.error(f"Error in factor processor: {e}")

    async def _flush_remaining(self):
        remaining = []
        while not self.queue.empty():
            try:
                remaining.append(self.queue.get_nowait())
                self.queue.task_done()
            except asyncio.QueueEmpty:
                break

        if remaining:
            logger.info(f"Flushing {len(remaining)} remaining primes")
            await self.process_batch(remaining)

    async def _compute(self, items: List[Dict]) -> List[Dict]:
        if self.executor is None:
            return [compute_row(i["coeffs"], i["q"], i["ell"]) for i in items]
        loop = asyncio.get_running_loop()
        futures = [
            loop.run_in_executor(self.executor, compute_row, i["coeffs"], i["q"], i["ell"])
            for i in items
        ]
        return await asyncio.gather(*futures)

    async def process_batch(self, batch: List[Dict]):
        """Compute the batch and persist it; (label, ell) pairs already cached are dropped"""
        db = SessionLocal()
        try:
            labels = {item["label"] for item in batch}
            cached = {
                (r.label, r.ell)
                for r in db.query(LocalFactorRecord.label, LocalFactorRecord.ell)
                .filter(LocalFactorRecord.label.in_(labels))
                .all()
            }
            fresh, seen = [], set()
            for item in batch:
                key = (item["label"], item["ell"])
                if key not in cached and key not in seen:
                    fresh.append(item)
                    seen.add(key)
            duplicate_count = len(batch) - len(fresh)

            rows = await self._compute(fresh)

            computed_count = 0
            for item, row in zip(fresh, rows):
                row_db = SessionLocal()
                try:
                    row_db.add(LocalFactorRecord(label=item["label"], **row))
                    row_db.commit()
                    computed_count += 1
                    logger.debug(f"stored {item['label']} ell={item['ell']}")
                except IntegrityError:
                    row_db.rollback()
                    duplicate_count += 1
                    logger.debug(f"duplicate {item['label']} ell={item['ell']}")
                except Exception as e:
                    row_db.rollback()
                    logger.error(f"Error storing ell={item['ell']}: {e}")
                finally:
                    row_db.close()

            self._update_stats_batch(db, len(batch), computed_count, duplicate_count)
            logger.info(f"Processed batch: {len(batch)} primes ({computed_count} computed, {duplicate_count} cached)")

        except Exception as e:
            logger.error(f"Error processing batch: {e}")
        finally:
            db.close()

    def _update_stats_batch(self, db, received, computed, duplicates):
        try:
            stats = db.query(SweepStatistics).first()
            if not stats:
                stats = SweepStatistics(received_count=0, computed_count=0, duplicate_dropped=0)
                db.add(stats)

            stats.received_count += received
            stats.computed_count += computed
            stats.duplicate_dropped += duplicates
            db.commit()
        except Exception as e:
            db.rollback()
            logger.error(f"Error updating stats: {e}")

    async def add_prime(self, f: WeilPolynomial, ell: int):
        await self.queue.put({"label": f.label or f.name, "coeffs": list(f.coeffs), "q": f.q, "ell": ell})

    async def wait_until_complete(self, timeout=60):
        try:
            await asyncio.wait_for(self.queue.join(), timeout=timeout)
            return True
        except asyncio.TimeoutError:
            logger.warning(f"Sweep timeout after {timeout}s, remaining: {self.queue.qsize()}")
            return False

    def queue_size(self):
        return self.queue.qsize()

    def get_uptime(self) -> float:
        return (datetime.utcnow() - self.start_time).total_seconds()

    async def stop(self):
        logger.info("Stopping factor processor...")
        await self.wait_until_complete(timeout=60)
        await self._flush_remaining()
        self.running = False
        if self.executor is not None:
            self.executor.shutdown(wait=True)
        logger.info("Factor processor stopped")


def cached_rows(f: WeilPolynomial, ells: Iterable[int]) -> List[LocalRow]:
    label = f.label or f.name
    wanted = set(ells)
    db = SessionLocal()
    try:
        records = (
            db.query(LocalFactorRecord)
            .filter(LocalFactorRecord.label == label)
            .order_by(LocalFactorRecord.ell)
            .all()
        )
        return [row_from_record(r, f.g) for r in records if r.ell in wanted]
    finally:
        db.close()


async def sweep(f: WeilPolynomial, ells: Iterable[int], batch_size: Optional[int] = None,
                threads: int = 1, timeout: float = 600) -> List[LocalRow]:
    """Compute local factors through the cache and return them in ascending ell"""
    init_db()
    ells = sorted(set(ells))
    processor = FactorProcessor(batch_size=batch_size, threads=threads)
    task = asyncio.create_task(processor.start())
    try:
        for ell in ells:
            await processor.add_prime(f, ell)
        await processor.wait_until_complete(timeout=timeout)
    finally:
        await processor.stop()
        task.cancel()
        try:
            await task
        except asyncio.CancelledError:
            pass
    logger.info(f"sweep of {len(ells)} primes for {f.name} finished in {processor.get_uptime():.2f}s")
    return cached_rows(f, ells)
