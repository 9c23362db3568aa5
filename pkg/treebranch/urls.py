"""
URL configuration for the treebranch project.

Only the admin is served: it browses generated instances, training runs and
evaluation records.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]
