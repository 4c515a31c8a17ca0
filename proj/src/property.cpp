namespace k3lat {}
