import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('reinforce', 'Reinforcement learning'), ('imitation', 'Imitation of strong branching')], max_length=20)),
                ('regime', models.CharField(blank=True, choices=[('mdp', 'MDP'), ('tmdp-dfs', 'tMDP+DFS'), ('tmdp-objlim', 'tMDP+ObjLim')], max_length=20)),
                ('train_dir', models.CharField(max_length=500)),
                ('valid_dir', models.CharField(blank=True, max_length=500)),
                ('seed', models.BigIntegerField(default=0)),
                ('config', models.JSONField(default=dict)),
                ('policy_path', models.CharField(max_length=500)),
                ('log_path', models.CharField(blank=True, max_length=500)),
                ('status', models.CharField(choices=[('running', 'Running'), ('finished', 'Finished'), ('aborted', 'Aborted')], default='running', max_length=20)),
                ('best_validation', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='EpochRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('epoch', models.IntegerField()),
                ('samples_cumulative', models.BigIntegerField(default=0)),
                ('episodes', models.IntegerField(default=0)),
                ('skipped', models.IntegerField(default=0)),
                ('mean_episode_nodes', models.FloatField(blank=True, null=True)),
                ('loss', models.FloatField(blank=True, null=True)),
                ('entropy', models.FloatField(blank=True, null=True)),
                ('accuracy', models.FloatField(blank=True, null=True)),
                ('validation_gmean', models.FloatField(blank=True, null=True)),
                ('validation_std_pct', models.FloatField(blank=True, null=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='epochs', to='training.trainingrun')),
            ],
            options={
                'ordering': ['run', 'epoch'],
                'unique_together': {('run', 'epoch')},
            },
        ),
    ]
