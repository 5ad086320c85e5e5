def main(array, high, low=0):
    if high==len(array):
        high=high-1
    if low < high:
        pi = f1(array, low, high)
        main(array,  pi - 1, low)
        main(array, high, pi + 1)
    return array
 
def f1(array, low, high):
    pivot = array[high]
    i = low - 1
    for j in range(low, high):
        if array[j] <= pivot:
            i = i + 1
            (array[i], array[j]) = (array[j], array[i])
    (array[i + 1], array[high]) = (array[high], array[i + 1])
    return i + 1
