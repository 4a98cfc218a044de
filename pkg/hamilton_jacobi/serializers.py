from rest_framework import serializers

from hamilton_jacobi.models import WIRE_TAGS


class HJReportSerializer(serializers.Serializer):
    """Read-only JSON form of an HJReport: {"eq", "K", "l2", "max", "per_node"}."""
    eq = serializers.ChoiceField(choices=sorted(WIRE_TAGS.values()))
    K = serializers.IntegerField(min_value=1)
    l2 = serializers.FloatField()
    max = serializers.FloatField()
    per_node = serializers.ListField()

    def to_representation(self, report):
        return report.as_dict()
