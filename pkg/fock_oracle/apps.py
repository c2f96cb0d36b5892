from django.apps import AppConfig


class FockOracleConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "fock_oracle"
