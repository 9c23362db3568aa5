from django.db import models


class Family(models.TextChoices):
    COMB_AUCTION = 'cauctions', 'Combinatorial auction'
    SET_COVER = 'setcover', 'Set covering'
    MAX_INDEP_SET = 'indset', 'Maximum independent set'
    FACILITY_LOC = 'facilities', 'Capacitated facility location'
    MULTI_KNAPSACK = 'knapsack', 'Multiple knapsack'


class InstanceRecord(models.Model):
    name = models.CharField(max_length=200)
    family = models.CharField(max_length=20, choices=Family.choices)
    size_params = models.JSONField(default=dict)
    seed = models.BigIntegerField()
    path = models.CharField(max_length=500, unique=True)
    optimal_value = models.FloatField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return self.name

    class Meta:
        verbose_name = "Instance"
        verbose_name_plural = "Instances"
        ordering = ['family', 'seed']
