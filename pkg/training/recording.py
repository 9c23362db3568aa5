"""Mirror a finished training run into the database."""

from django.db import transaction
from django.utils import timezone

from .models import EpochRecord, TrainingRun


def record_run(run, log, status=TrainingRun.Status.FINISHED):
    with transaction.atomic():
        run.epochs.all().delete()
        EpochRecord.objects.bulk_create([
            EpochRecord(run=run, **{
                name: getattr(stats, name) for name in (
                    'epoch', 'samples_cumulative', 'episodes', 'skipped', 'mean_episode_nodes',
                    'loss', 'entropy', 'accuracy', 'validation_gmean', 'validation_std_pct',
                )
            })
            for stats in log.records
        ])
        run.best_validation = log.best_validation
        run.status = status
        run.finished_at = timezone.now()
        run.save()
    return run
