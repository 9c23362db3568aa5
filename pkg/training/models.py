from django.db import models

from .config import Regime


class TrainingRun(models.Model):
    class Kind(models.TextChoices):
        REINFORCE = 'reinforce', 'Reinforcement learning'
        IMITATION = 'imitation', 'Imitation of strong branching'

    class Status(models.TextChoices):
        RUNNING = 'running', 'Running'
        FINISHED = 'finished', 'Finished'
        ABORTED = 'aborted', 'Aborted'

    kind = models.CharField(max_length=20, choices=Kind.choices)
    regime = models.CharField(max_length=20, choices=Regime.choices, blank=True)
    train_dir = models.CharField(max_length=500)
    valid_dir = models.CharField(max_length=500, blank=True)
    seed = models.BigIntegerField(default=0)
    config = models.JSONField(default=dict)
    policy_path = models.CharField(max_length=500)
    log_path = models.CharField(max_length=500, blank=True)
    status = models.CharField(max_length=20, choices=Status.choices, default=Status.RUNNING)
    best_validation = models.FloatField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    def __str__(self):
        label = self.get_regime_display() if self.regime else self.get_kind_display()
        return f"{label} (seed {self.seed})"

    class Meta:
        ordering = ['-created_at']


class EpochRecord(models.Model):
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name='epochs')
    epoch = models.IntegerField()
    samples_cumulative = models.BigIntegerField(default=0)
    episodes = models.IntegerField(default=0)
    skipped = models.IntegerField(default=0)
    mean_episode_nodes = models.FloatField(null=True, blank=True)
    loss = models.FloatField(null=True, blank=True)
    entropy = models.FloatField(null=True, blank=True)
    accuracy = models.FloatField(null=True, blank=True)
    validation_gmean = models.FloatField(null=True, blank=True)
    validation_std_pct = models.FloatField(null=True, blank=True)

    def __str__(self):
        return f"{self.run} epoch {self.epoch}"

    class Meta:
        ordering = ['run', 'epoch']
        unique_together = ['run', 'epoch']
