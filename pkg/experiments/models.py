from django.db import models


class SweepRun(models.Model):
    """A sweep identified by the hash of its canonical specification"""

    class Mode(models.TextChoices):
        FIXED_N = 'fixed_n', 'Fixed winding number'
        OPTIMAL_N = 'optimal_n', 'Optimal winding number'
        OPEN = 'open', 'Open system'
        MONOTONE_FAMILY = 'monotone_family', 'Random monotone family'

    spec_hash = models.CharField(max_length=40, unique=True, help_text="sha1 of the canonical spec JSON")
    mode = models.CharField(max_length=20, choices=Mode.choices)
    spec = models.JSONField()

    # Timestamps
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.mode} sweep {self.spec_hash[:10]}"

    def completed_keys(self):
        """Return the point keys already computed successfully"""
        return set(
            self.points.filter(status=SweepPoint.Status.COMPLETED).values_list('point_key', flat=True)
        )


class SweepPoint(models.Model):
    """Journal entry for one grid point of a sweep"""

    class Status(models.TextChoices):
        COMPLETED = 'completed', 'Completed'
        FAILED = 'failed', 'Failed'

    run = models.ForeignKey(SweepRun, on_delete=models.CASCADE, related_name='points')
    point_key = models.CharField(max_length=255, help_text="Canonical JSON of the grid coordinates")
    coordinates = models.JSONField()
    status = models.CharField(max_length=20, choices=Status.choices)
    result = models.JSONField(default=dict, blank=True)
    error = models.TextField(blank=True)

    finished_at = models.DateTimeField(auto_now=True)

    class Meta:
        ordering = ['run', 'point_key']
        constraints = [
            models.UniqueConstraint(fields=['run', 'point_key'], name='unique_sweep_point'),
        ]
        indexes = [
            models.Index(fields=['run', 'status'], name='sweep_point_run_status_idx'),
        ]

    def __str__(self):
        return f"{self.point_key} ({self.status})"
