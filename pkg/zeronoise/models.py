from django.db import models
import uuid


class ExperimentRun(models.Model):
    """Ledger entry for one theorem-level experiment run"""

    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    VERDICT_CHOICES = [
        ('pass', 'Pass'),
        ('fail', 'Fail'),
        ('flagged', 'Flagged'),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    experiment = models.CharField(max_length=40)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')
    config = models.JSONField(default=dict)
    # up to 2**64 - 1, wider than BigIntegerField
    master_seed = models.CharField(max_length=24)
    output_dir = models.CharField(max_length=500, blank=True, default='')
    output_files = models.JSONField(default=list, blank=True)
    verdict = models.CharField(max_length=10, choices=VERDICT_CHOICES, blank=True, null=True)
    summary = models.JSONField(blank=True, null=True)
    error_message = models.TextField(blank=True, null=True)

    # Timestamps
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)
    completed_at = models.DateTimeField(blank=True, null=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.experiment} run {self.id} - {self.status}"
