import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'surfacelab.settings')
django.setup()
