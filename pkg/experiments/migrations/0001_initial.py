# Generated by Django 5.2.5 on 2026-10-18 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SweepRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('spec_hash', models.CharField(help_text='sha1 of the canonical spec JSON', max_length=40, unique=True)),
                ('mode', models.CharField(choices=[('fixed_n', 'Fixed winding number'), ('optimal_n', 'Optimal winding number'), ('open', 'Open system'), ('monotone_family', 'Random monotone family')], max_length=20)),
                ('spec', models.JSONField()),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='SweepPoint',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('point_key', models.CharField(help_text='Canonical JSON of the grid coordinates', max_length=255)),
                ('coordinates', models.JSONField()),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('failed', 'Failed')], max_length=20)),
                ('result', models.JSONField(blank=True, default=dict)),
                ('error', models.TextField(blank=True)),
                ('finished_at', models.DateTimeField(auto_now=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='points', to='experiments.sweeprun')),
            ],
            options={
                'ordering': ['run', 'point_key'],
                'indexes': [models.Index(fields=['run', 'status'], name='sweep_point_run_status_idx')],
                'constraints': [models.UniqueConstraint(fields=('run', 'point_key'), name='unique_sweep_point')],
            },
        ),
    ]
