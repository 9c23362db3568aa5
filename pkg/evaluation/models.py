from django.db import models


class Evaluation(models.Model):
    instance_dir = models.CharField(max_length=500)
    methods = models.JSONField(default=list)
    n_seeds = models.IntegerField(default=5)
    time_limit = models.FloatField(null=True, blank=True)
    seed = models.BigIntegerField(default=0)
    csv_path = models.CharField(max_length=500, blank=True)
    markdown_path = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"{self.instance_dir} ({len(self.methods)} methods, {self.n_seeds} seeds)"

    class Meta:
        ordering = ['-created_at']


class EvalRun(models.Model):
    evaluation = models.ForeignKey(Evaluation, on_delete=models.CASCADE, related_name='runs')
    instance = models.CharField(max_length=200)
    seed = models.IntegerField()
    method = models.CharField(max_length=500)
    node_count = models.IntegerField()
    wall_time = models.FloatField()
    status = models.CharField(max_length=30)
    finished = models.BooleanField(default=True)

    def __str__(self):
        return f"{self.method} on {self.instance} seed {self.seed}"

    class Meta:
        verbose_name = "Evaluation run"
        ordering = ['evaluation', 'instance', 'seed', 'method']
