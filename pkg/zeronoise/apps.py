from django.apps import AppConfig


class ZeroNoiseConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "zeronoise"
    verbose_name = "Zero-noise laboratory"
