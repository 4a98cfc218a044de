from django.conf import settings

DEFAULTS = {
    'MIN_NODES': 8,
    'COMPATIBILITY_TOL': 1e-8,
    'NEWTON_TOL': 1e-12,
    'NEWTON_MAX_ITER': 50,
    'FD_STEP': 1e-5,
    'FD_STEP_SECOND': 1e-4,
    'FD_STEP_OPERATOR': 3e-4,
    'HAMILTONIAN_JACOBIAN_STEP': 1e-4,
    'DUAL_NORM_RESTARTS': 20,
    'CFL': 0.5,
    'OVERFLOW_GUARD': 1e8,
    'SHOOTING_TOL': 1e-10,
    'PLAN_CACHE_SIZE': 16,
    'SOLUTION_CACHE_SIZE': 32,
    'COLUMN_CACHE_SIZE': 512,
    'OUTPUT_DIR': 'out',
    'SCENARIO_DIR': 'scenarios',
}


def lab_setting(name, override=None):
    """Return ``override`` if given, else the SURFACELAB setting ``name``."""
    if override is not None:
        return override
    configured = getattr(settings, 'SURFACELAB', {}) if settings.configured else {}
    if name in configured:
        return configured[name]
    return DEFAULTS[name]
