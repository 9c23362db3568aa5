from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='InstanceRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=200)),
                ('family', models.CharField(choices=[('cauctions', 'Combinatorial auction'), ('setcover', 'Set covering'), ('indset', 'Maximum independent set'), ('facilities', 'Capacitated facility location'), ('knapsack', 'Multiple knapsack')], max_length=20)),
                ('size_params', models.JSONField(default=dict)),
                ('seed', models.BigIntegerField()),
                ('path', models.CharField(max_length=500, unique=True)),
                ('optimal_value', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Instance',
                'verbose_name_plural': 'Instances',
                'ordering': ['family', 'seed'],
            },
        ),
    ]
