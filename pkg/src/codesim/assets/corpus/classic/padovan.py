def g(n):
    a, b = 1, 1
    c, d = 1, 1
    for i in range(3, n+1):
        d = a + b
        a = b
        b = c
        c = d 
    return d
