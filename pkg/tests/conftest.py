from hypothesis import HealthCheck, settings

# Property tests drive real ODE integrations; wall-time per example varies
# too much for hypothesis's default deadline to be meaningful here.
settings.register_profile(
    "research",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("research")
