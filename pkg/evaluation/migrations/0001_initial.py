import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='Evaluation',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('instance_dir', models.CharField(max_length=500)),
                ('methods', models.JSONField(default=list)),
                ('n_seeds', models.IntegerField(default=5)),
                ('time_limit', models.FloatField(blank=True, null=True)),
                ('seed', models.BigIntegerField(default=0)),
                ('csv_path', models.CharField(blank=True, max_length=500)),
                ('markdown_path', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='EvalRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('instance', models.CharField(max_length=200)),
                ('seed', models.IntegerField()),
                ('method', models.CharField(max_length=500)),
                ('node_count', models.IntegerField()),
                ('wall_time', models.FloatField()),
                ('status', models.CharField(max_length=30)),
                ('finished', models.BooleanField(default=True)),
                ('evaluation', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='runs', to='evaluation.evaluation')),
            ],
            options={
                'verbose_name': 'Evaluation run',
                'ordering': ['evaluation', 'instance', 'seed', 'method'],
            },
        ),
    ]
