from django.apps import AppConfig


class OpenSystemConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "open_system"
