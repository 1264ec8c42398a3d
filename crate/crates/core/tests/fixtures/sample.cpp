#include <bits/stdc++.h>
#define LIMIT 100
using namespace std;

// Counts pairs whose sum stays below a bound.
int unusedSquare(int x) {
    return x * x;
}

long long countPairs(vector<int>& a, int n, int bound) {
    long long total = 0;
    int scratch = 42;
    for (int i = 0; i < n; i++) {
        for (int j = i + 1; j < n; j++) {
            if (a[i] + a[j] < bound) {
                total++;
            }
        }
    }
    return total;
}

int depth(int n) {
    if (n <= 1) return 0;
    return 1 + depth(n / 2);
}

int main() {
    int n = 5;
    vector<int> a = {3, 1, 4, 1, 5};
    string label = "unusedSquare";
    cout << label << countPairs(a, n, LIMIT) << " " << depth(n) << endl;
    return 0;
}
