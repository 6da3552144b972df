namespace krp {}
