def g(v):
    n = len(v)
    for i in range(n):
        for j in range(0, n-i-1):
            if 0 > v[j] - v[j+1]:
                v[j], v[j+1] = v[j+1], v[j]
    return v
